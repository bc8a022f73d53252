from .ablation import AblationResult, heldin_split, run_ablation
from .loop import STAGE_PROMPTS, TrainConfig, TrainResult, TrainState, train_stage
from .pretrain import PretrainConfig, prepare_base, pretrain_decoder_lm, pretrain_vision
from .recipe import DeskRecipe, build_base, corpus_tokenizer
from .schedule import lr_at

__all__ = [
    "AblationResult",
    "DeskRecipe",
    "PretrainConfig",
    "STAGE_PROMPTS",
    "TrainConfig",
    "TrainResult",
    "TrainState",
    "build_base",
    "corpus_tokenizer",
    "heldin_split",
    "lr_at",
    "prepare_base",
    "pretrain_decoder_lm",
    "pretrain_vision",
    "run_ablation",
    "train_stage",
]
