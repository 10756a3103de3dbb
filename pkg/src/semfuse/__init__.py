"""Zero-shot and generalized zero-shot classification on precomputed
features, with class semantics built from word vectors of class names
and of generated class descriptions, fused by learned affine layers."""

from .autodiff import ParamStore, Tensor, backward, grad_check
from .datasets import FeatureSet, SplitSpec, SynthConfig, load_features, load_split, synth_dataset
from .embed_zsl import EmbedTrainConfig, classify, embed_loss, train_embed
from .evaluation import EvalReport, borda_count, evaluate_run, harmonic_mean, per_class_top1
from .fusion import FusionParams, SemanticBundle, fuse, init_fusion
from .gen_zsl import GanTrainer, GenTrainConfig, gradient_penalty, synthesize
from .llm_client import DescriptionCache, EndpointConfig, build_prompt, fetch_description
from .wordvec import WordVectorTable, embed_text, load_word_vectors

__all__ = [
    "ParamStore",
    "Tensor",
    "backward",
    "grad_check",
    "FeatureSet",
    "SplitSpec",
    "SynthConfig",
    "load_features",
    "load_split",
    "synth_dataset",
    "EmbedTrainConfig",
    "classify",
    "embed_loss",
    "train_embed",
    "EvalReport",
    "borda_count",
    "evaluate_run",
    "harmonic_mean",
    "per_class_top1",
    "FusionParams",
    "SemanticBundle",
    "fuse",
    "init_fusion",
    "GanTrainer",
    "GenTrainConfig",
    "gradient_penalty",
    "synthesize",
    "DescriptionCache",
    "EndpointConfig",
    "build_prompt",
    "fetch_description",
    "WordVectorTable",
    "embed_text",
    "load_word_vectors",
]
