"""Text augmentation toolkit and evaluation harness for low-resource sentiment analysis."""

__version__ = "0.1.0"

from .augmentors import (  # noqa: E402
    AugmentationConfig,
    MaskPlan,
    augment_dataset,
    back_translate,
    ner_mask_parallel,
    ner_mask_sequential,
    paraphrase,
    random_mask_parallel,
    random_mask_sequential,
    select_mask_indices,
)
from .backends import BackendSet, load_backend_config, make_mock_backend  # noqa: E402
from .corpus import Dataset, LabeledExample, load_dataset, map_labels, write_dataset  # noqa: E402
from .evalharness import cross_domain_matrix, evaluate, render_report  # noqa: E402
from .generative import (  # noqa: E402
    build_completion_augmented_dataset,
    complete_sentence,
    generate_pseudo_labels,
    gpt_label,
    halve_sentence,
)
from .textprep import clean_text, detokenize, tokenize  # noqa: E402
