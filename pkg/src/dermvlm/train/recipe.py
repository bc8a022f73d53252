"""The pinned desk-scale recipe: seeds, sizes and stage configs that take a
fresh checkout to a working two-stage checkpoint in minutes on a laptop CPU.

The paper-scale schedule (20 epochs x 5000 iterations, warmup 5000, batch 2,
peak 1e-4, plain SGD) remains the TrainConfig default; this module only
bundles the measured desk-scale overrides used by the acceptance run and the
experiment scripts. Both fine-tuning stages unfreeze the decoder alongside
the alignment layer here: with no pretrained full-size decoder available,
alignment-only updates cannot steer a desk-scale frozen decoder reliably
(the alignment-only regime stays available through freeze_overrides).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..config import ModelConfig
from ..model.pipeline import PipelineModel, build_model
from ..model.tokenizer import Tokenizer, build_tokenizer
from ..prompts import template_texts
from ..synth.corpus import CorpusBundle, SynthSpec, generate_corpus
from .ablation import heldin_split
from .loop import TrainConfig
from .pretrain import PretrainConfig, prepare_base

TRAIN_SEED = 7
MODEL_SEED = 1
N_TRAIN = 200
N_HELDIN = 50

UNFREEZE_STAGES = {"alignment": False, "decoder": False}


@dataclass(frozen=True)
class DeskRecipe:
    corpus_spec: SynthSpec = SynthSpec(n_images=N_TRAIN, seed=TRAIN_SEED)
    model_config: ModelConfig = ModelConfig(seed=MODEL_SEED)
    pretrain: PretrainConfig = PretrainConfig(
        vision_steps=1500, decoder_steps=1500, batch_size=16, lr=1e-3, seed=MODEL_SEED
    )
    stage1: TrainConfig = TrainConfig(
        stage=1, optimizer="adam", peak_lr=1e-3, warmup_steps=50, batch_size=8,
        desk_scale_override=(1, 2000), seed=11, freeze_overrides=UNFREEZE_STAGES,
    )
    stage2: TrainConfig = TrainConfig(
        stage=2, optimizer="adam", peak_lr=1e-3, warmup_steps=50, batch_size=8,
        desk_scale_override=(1, 1000), seed=12, freeze_overrides=UNFREEZE_STAGES,
    )
    # the resumed stage leaves the image-to-language map from stage 1 frozen
    # and only teaches the decoder the diagnosis mode, which keeps stage-1
    # describe behavior intact
    stage2_resumed: TrainConfig = TrainConfig(
        stage=2, optimizer="adam", peak_lr=3e-4, warmup_steps=50, batch_size=8,
        desk_scale_override=(1, 800), seed=13,
        freeze_overrides={"alignment": True, "decoder": False},
    )


def corpus_tokenizer(bundle: CorpusBundle) -> Tokenizer:
    texts = [p.text for p in bundle.stage1 + bundle.stage2]
    return build_tokenizer(texts, extra_texts=template_texts())


def build_base(recipe: DeskRecipe | None = None):
    """Generate the pinned corpus and prepare the base model.

    Returns (train_bundle, heldin_bundle, base_model, prep_report).
    """
    recipe = recipe or DeskRecipe()
    bundle = generate_corpus(recipe.corpus_spec)
    heldin = heldin_split(bundle, N_HELDIN)
    model = build_model(recipe.model_config, corpus_tokenizer(bundle))
    report = prepare_base(model, bundle, recipe.pretrain)
    return bundle, heldin, model, report
