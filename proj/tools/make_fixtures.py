#!/usr/bin/env python3
# Copyright 2026 The ECSP Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the synthetic test fixtures under tests/fixtures/.

Everything is derived from a fixed seed, so rerunning produces identical files.
Prompt goldens are rendered here from the template text, independently of the
C++ renderer they check.
"""

import json
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"

EMOTIONS = ["amusement", "awe", "contentment", "excitement", "anger",
            "disgust", "fear", "sadness", "something else"]
LANGUAGES = ["english", "arabic", "chinese"]
STYLES = ["Impressionism", "Baroque", "Cubism", "Romanticism", "Realism", "Expressionism"]
WORDS = ["calm", "lake", "storm", "light", "shadow", "river", "crowd", "tower", "garden",
         "night", "smile", "ruin", "flower", "sea", "mountain", "child", "fire", "bridge"]
IMAGE_DIM = 8
TEXT_DIM = 8


def dump(obj):
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_lines(path, lines):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def simplex(rng, favored, strength):
    raw = [rng.random() * 0.5 for _ in EMOTIONS]
    raw[favored] += strength
    total = sum(raw)
    return [v / total for v in raw]


def make_e2e():
    rng = random.Random(20240611)
    out = ROOT / "e2e"
    prototypes = [[rng.uniform(-1, 1) for _ in range(IMAGE_DIM + TEXT_DIM)] for _ in EMOTIONS]

    records, embeds, xlmr, x2vlm = [], [], [], []
    for lang_i, lang in enumerate(LANGUAGES):
        for j in range(20):
            rid = f"{lang[:2]}{j:02d}"
            split = "train" if j < 12 else ("val" if j < 16 else "test")
            gold = rng.randrange(len(EMOTIONS))
            utter = " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 9)))
            rec = {"id": rid, "art_style": rng.choice(STYLES), "language": lang, "utterance": utter,
                   "split": split, "image_ref": f"img/{rid}.jpg", "emotion": EMOTIONS[gold]}
            if j % 5 == 0:
                rec["image_width"] = 600 + 50 * lang_i + j
                rec["image_height"] = 400 + 30 * lang_i + j
            records.append(rec)

            vec = [round(p + rng.gauss(0, 0.35), 4) for p in prototypes[gold]]
            embeds.append({"id": rid, "image_embed": vec[:IMAGE_DIM], "text_embed": vec[IMAGE_DIM:]})

            guess = gold if rng.random() < 0.7 else rng.randrange(len(EMOTIONS))
            xlmr.append({"sample_id": rid, "backend_id": "xlmr", "variant_id": "identity",
                         "probs": simplex(rng, guess, 1.5)})
            guess = gold if rng.random() < 0.65 else rng.randrange(len(EMOTIONS))
            for variant in ["identity", "hflip", "vflip", "crop"]:
                x2vlm.append({"sample_id": rid, "backend_id": "x2vlm", "variant_id": variant,
                              "probs": simplex(rng, guess, 1.2)})

    write_lines(out / "annotations.jsonl", [dump(r) for r in records])
    write_lines(out / "embeddings.jsonl", [dump(e) for e in embeds])
    write_lines(out / "probs_xlmr.jsonl", [dump(p) for p in xlmr])
    write_lines(out / "probs_x2vlm.jsonl", [dump(p) for p in x2vlm])
    (out / "ensemble.cfg").write_text("# backend_id = weight\nxlmr = 0.6\nx2vlm = 0.4\n")
    (out / "run.cfg").write_text(
        "# 60-sample synthetic corpus, file-mode backends\n"
        "annotations = annotations.jsonl\n"
        "embeddings = embeddings.jsonl\n"
        "output_dir = out\n"
        "eta = 0.75\n"
        "k = 1\n"
        "prompt_variant = ecsp\n"
        "query_split = all\n"
        "tta = true\n"
        "seed = 7\n"
        "ensemble = ensemble.cfg\n"
        "method = fixture-ensemble\n"
        "backend.xlmr.mode = file\n"
        "backend.xlmr.location = probs_xlmr.jsonl\n"
        "backend.xlmr.max_tokens = 90\n"
        "backend.xlmr.expects_image = false\n"
        "backend.x2vlm.mode = file\n"
        "backend.x2vlm.location = probs_x2vlm.jsonl\n"
        "backend.x2vlm.max_tokens = 100\n"
        "backend.x2vlm.expects_image = true\n")


SIMPLE = ("The art style of image is {art_style}. There is a comment from a {language} person. "
          "What emotions did he express? amusement, awe, contentment, excitement, anger, disgust, "
          "fear, sadness or something else,{utterance}.")
PSEUDO = "The emotion this picture is most likely trying to express is {label}."


def make_prompts():
    rng = random.Random(99)
    out = ROOT / "prompts"
    utterances = [
        "a calm lake at dawn", "the storm frightens me", "so much light in this garden",
        "ruins of a {forgotten} city", "بحر هادئ تحت القمر", "夜晚的桥让我感到平静",
        "crowd  gathers   near the tower", "what a strange, twisted face", "I love the colors!",
        "death and disasters everywhere", "the child smiles", "ناس في السوق",
        "红色的花", "feeling of satisfaction", "dark shadows on the river",
        "it looks like {utterance}", "fire consumes the bridge", "mountains in winter",
        "a quiet evening, nothing more", "laughing people at a feast",
    ]
    records, outcomes, sp, pl, ecsp = [], [], [], [], []
    for i, utter in enumerate(utterances):
        lang = LANGUAGES[i % 3]
        rid = f"p{i:02d}"
        rec = {"id": rid, "art_style": STYLES[i % len(STYLES)], "language": lang, "utterance": utter,
               "split": "test", "image_ref": f"img/{rid}.jpg"}
        records.append(rec)

        # Every fourth record has no pseudo-label; record 5 carries two gated labels (k = 3).
        if i % 4 == 3:
            gated = []
            neighbors = [{"id": f"t{i:02d}a", "sim": 0.5, "label": EMOTIONS[i % 9]}]
            k = 1
        elif i == 5:
            gated = [EMOTIONS[2], EMOTIONS[7]]
            neighbors = [{"id": "t05a", "sim": 0.9, "label": gated[0]},
                         {"id": "t05b", "sim": 0.8, "label": gated[1]},
                         {"id": "t05c", "sim": 0.6, "label": EMOTIONS[0]}]
            k = 3
        else:
            label = EMOTIONS[rng.randrange(9)]
            gated = [label]
            neighbors = [{"id": f"t{i:02d}a", "sim": 0.8 + 0.01 * i, "label": label}]
            k = 1
        outcomes.append({"query_id": rid, "neighbors": neighbors,
                         "pseudo_label": gated[0] if gated else None, "pseudo_labels": gated,
                         "eta": 0.75, "k": k})

        simple = SIMPLE.format(art_style=rec["art_style"], language=lang, utterance=utter) \
            if "{" not in utter else (SIMPLE.replace("{utterance}", "\0")
                                      .format(art_style=rec["art_style"], language=lang)
                                      .replace("\0", utter))
        sp.append(simple)
        if gated:
            sentence = PSEUDO.format(label=", ".join(gated))
            ecsp.append(simple + " " + sentence)
            pl.append(utter + ". " + sentence)
        else:
            ecsp.append(simple)
            pl.append(utter)

    write_lines(out / "records.jsonl", [dump(r) for r in records])
    write_lines(out / "outcomes.jsonl", [dump(o) for o in outcomes])
    write_lines(out / "golden_sp.txt", sp)
    write_lines(out / "golden_pl.txt", pl)
    write_lines(out / "golden_ecsp.txt", ecsp)


if __name__ == "__main__":
    make_e2e()
    make_prompts()
