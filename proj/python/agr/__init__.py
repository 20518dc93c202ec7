"""Attribute-graph fashion recommender.

Pipeline stages mirror the ``agr`` command-line tool and return the same JSON
summaries as dictionaries. Errors raise ``AgrError`` subclasses matching the
tool's exit codes: ``ConfigError`` (2), ``IntegrityError`` (3) and
``LookupFailure`` (4).
"""

from ._core import (
    AgrError,
    ConfigError,
    IntegrityError,
    LookupFailure,
    Model,
    bpr_loss,
    evaluate,
    extract,
    ndcg_at_k,
    parse_keywords,
    planted_world,
    precision_at_k,
    prepare,
    recall_at_k,
    recommend,
    render_prompt,
    split_sizes,
    train,
)

__all__ = [
    "AgrError",
    "ConfigError",
    "IntegrityError",
    "LookupFailure",
    "Model",
    "bpr_loss",
    "evaluate",
    "extract",
    "ndcg_at_k",
    "parse_keywords",
    "planted_world",
    "precision_at_k",
    "prepare",
    "recall_at_k",
    "recommend",
    "render_prompt",
    "split_sizes",
    "train",
]
