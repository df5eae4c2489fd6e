"""
Training the layout generator on the built-in synthetic corpus
==============================================================

A miniature end-to-end run: tokenize a seeded two-column corpus, train the
denoising generator briefly, sample new layouts, and look at the results.
Desk-scale settings; expect a couple of minutes on one CPU core.
"""

from doclayout import Vocabulary
from doclayout.diffusion import (DenoiserConfig, SequenceSpec, TrainConfig,
                                 encode_corpus, sample, train)
from doclayout.metrics import corpus_summary
from doclayout.render import save_corpus_svgs
from doclayout.synthetic import ARTICLE_SCHEMA, two_column_corpus

corpus = two_column_corpus(128, seed=0)
print("training corpus:", corpus_summary(corpus).to_dict())

# Layouts become fixed-length token rows: BOS, then (class, x, y, w, h)
# per box on a 64-level grid, then EOS and padding.
spec = SequenceSpec(Vocabulary(64, ARTICLE_SCHEMA.K), ARTICLE_SCHEMA,
                    corpus[0].page, max_len=64)
tokens, _ = encode_corpus(corpus, spec)
print("token matrix:", tokens.shape)

cfg = TrainConfig(lr=1e-4, batch_size=64, max_steps=400, seed=0, T=500, d=16)
model_cfg = DenoiserConfig(vocab_size=spec.vocab.size, d=16, width=64,
                           layers=2, heads=2, max_len=64)
model, schedule, log_rows = train(tokens, cfg, model_cfg=model_cfg)
print(f"loss: {log_rows[0][1]:.3f} (step 1) -> {log_rows[-1][1]:.3f} (step {cfg.max_steps})")

layouts, stats = sample(model, schedule, 16, spec, seed=1)
print(f"sampled {stats.count} layouts; structural validity {stats.validity_rate:.0%}")
nonempty = [lay for lay in layouts if len(lay)]
if nonempty:
    print("sampled corpus:", corpus_summary(nonempty).to_dict())
save_corpus_svgs(layouts, "demo_samples")
print("SVGs in demo_samples/ (longer training sharpens the structure)")
