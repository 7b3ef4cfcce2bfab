"""Smoke test for the mbst_py extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/python
"""

import math
import sys

import mbst_py


def main():
    lang = mbst_py.SyntheticLanguage(1)
    sentences = lang.style_sentences(40)
    assert len(sentences) == 40
    for label, tokens in sentences:
        assert lang.detect_style(tokens) == label

    src = sentences[0][1]
    for pivot in ("l1", "l2"):
        assert lang.back_translate(lang.translate(src, pivot), pivot) == src

    vocab = mbst_py.Vocabulary([t for _, t in sentences])
    assert vocab.token(1) == "<s>"
    assert vocab.decode(vocab.encode(src)) == src

    assert mbst_py.bleu([src], [src]) == 100.0
    assert mbst_py.bleu([["x", "y", "z", "q"]], [["a", "b", "c", "d"]]) == 0.0

    lm = mbst_py.LanguageModel([t for _, t in sentences])
    ppl = lm.perplexity([t for _, t in sentences[:5]])
    assert math.isfinite(ppl) and ppl >= 1.0

    for name in mbst_py.primitives():
        err = mbst_py.grad_check(name, seed=3)
        assert err < 1e-4, (name, err)

    if len(sys.argv) > 1:
        ckpt = mbst_py.Checkpoint(sys.argv[1])
        out, flagged = ckpt.transfer(src, sentences[0][0])
        print(f"{ckpt.variant} {ckpt.content_hash()[:12]}: {' '.join(src)} -> {' '.join(out)} (copied: {flagged})")

    print("mbst_py smoke test passed")


if __name__ == "__main__":
    main()
