#!/usr/bin/env python3
"""Regenerate the bundled toy corpus and the metrics demo files.

The corpus imitates photo-critique threads: every image gets a blend of
short generic praise (filtered out by the informativeness threshold),
longer content-specific critiques (kept), and assorted noise: emoji
runs, HTML entities, non-English text, keyboard mashing (dropped by the
noise gate).  Output is deterministic for a given seed, so the checked-in
files can be reproduced exactly.

Usage:
    python scripts/make_toy_corpus.py [--output-dir src/capsieve/data]
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

SAFE_COMMENTS = [
    "nice shot",
    "great shot!",
    "i love it",
    "well done",
    "great colors",
    "nice one",
    "awesome!",
    "so beautiful",
    "i like this",
    "very nice",
    "good job",
    "stunning",
    "this is perfect",
    "wow",
    "i love the colors here",
    "cool",
    "beautiful",
    "nice colors",
    "great composition",
    "my favorite this week",
]

NOISE_COMMENTS = [
    "woooooooow!!!!!!!!",
    "juhuuuu supeeeeer duperrrrr",
    "&amp; &amp; &amp;",
    "che bella foto amico mio",
    "das licht gefallt mir sehr gut hier",
    "qwe asdf zxcv qwerty",
    ":-) :-) :-) :-)",
    "ooooooohhhhhh myyyyyy",
    "una imagen preciosa de verdad",
    "???!!!???",
    "prachtig licht en mooie kleuren",
    "hahahahahahaha",
]

# Subjects deliberately absent from the lexicon: the tagger's NOUN
# fallback picks them up and their rarity is what earns high scores.
SUBJECTS = [
    "lighthouse", "meadow", "orchid", "kingfisher", "dragonfly", "waterfall",
    "canyon", "glacier", "harbor", "marina", "pier", "dune", "valley",
    "vineyard", "chapel", "alley", "rooftop", "fountain", "archway",
    "lagoon", "heron", "sparrow", "owl", "falcon", "foal", "kitten",
    "tulip", "poppy", "iris", "pinecone", "saddle", "windmill", "barn",
    "beacon", "jetty", "cliff", "ridge", "summit", "grove", "creek",
]

ADJS = [
    "soft", "golden", "moody", "crisp", "vivid", "gentle", "subtle",
    "dramatic", "warm", "cool", "deep", "rich", "pale", "misty", "stormy",
    "hazy", "velvety", "silky", "dusty", "frosty", "amber", "turquoise",
    "crimson", "emerald", "sapphire", "smoky", "weathered", "rustic",
]

TIMES = ["morning", "evening", "autumn", "winter", "summer", "spring", "twilight", "dawn"]
SIDES = ["top", "bottom", "left", "right"]
GENRES = ["portrait", "landscape", "macro", "silhouette", "closeup"]

INFORMATIVE_TEMPLATES = [
    "the {adj1} {time} light on the {subj1} creates {adj2} {adj3} reflections near the {adj4} {subj2}",
    "i like how the {adj1} {subj1} in the foreground leads the eye toward the {adj2} {subj2} on the horizon",
    "the {adj1} tones and the {adj2} texture of the {subj1} give this {genre} a wonderfully {adj3} mood",
    "maybe crop the {side} half and boost the contrast so the {adj1} {subj1} stands out against the {adj2} background",
    "the shallow depth of field isolates the {adj1} {subj1} beautifully while the {adj2} bokeh keeps the background clean",
    "lovely composition with the {adj1} {subj1} placed on the rule of thirds and the {adj2} {subj2} filling the negative space",
    "the post processing looks great but the blown highlights in the {adj1} sky above the {subj1} are a little distracting",
    "wonderful capture of the {adj1} {subj1} in motion with the {adj2} water frozen by a fast shutter speed",
    "the {adj1} shadows falling across the {subj1} add real depth and the {adj2} {subj2} anchors the composition",
    "great timing on the {subj1} and the {adj1} backlighting gives the {adj2} {subj2} a glowing outline",
]


def informative_comment(rng: random.Random) -> str:
    template = rng.choice(INFORMATIVE_TEMPLATES)
    subs = rng.sample(SUBJECTS, 2)
    adjs = rng.sample(ADJS, 4)
    return template.format(
        subj1=subs[0], subj2=subs[1],
        adj1=adjs[0], adj2=adjs[1], adj3=adjs[2], adj4=adjs[3],
        time=rng.choice(TIMES), side=rng.choice(SIDES), genre=rng.choice(GENRES),
    )


def make_corpus(rng: random.Random, n_images: int) -> list[dict]:
    images = []
    for i in range(1, n_images + 1):
        comments = []
        for text in rng.sample(SAFE_COMMENTS, rng.randint(2, 3)):
            comments.append(text)
        for _ in range(rng.randint(2, 3)):
            comments.append(informative_comment(rng))
        if rng.random() < 0.6:
            comments.append(rng.choice(NOISE_COMMENTS))
        rng.shuffle(comments)
        images.append(
            {
                "image_id": f"im{i:04d}",
                "comments": [
                    {"id": f"c{j + 1}", "text": t} for j, t in enumerate(comments)
                ],
            }
        )
    return images


def make_metric_files(rng: random.Random, n_images: int) -> tuple[list, list]:
    """Candidates and references for the metrics demo (separate ids)."""
    candidates, references = [], []
    for i in range(1, n_images + 1):
        iid = f"ev{i:03d}"
        refs = [informative_comment(rng) for _ in range(rng.randint(3, 4))]
        if i % 3 == 0:
            cand = refs[0]  # exact match: drives BLEU/ROUGE toward 1
        elif i % 3 == 1:
            words = refs[0].split()
            cut = max(4, len(words) * 2 // 3)
            cand = " ".join(words[:cut])
        else:
            cand = informative_comment(rng)
        candidates.append({"image_id": iid, "caption": cand})
        references.append({"image_id": iid, "captions": refs})
    return candidates, references


def write_jsonl(path: Path, rows: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--output-dir",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "src" / "capsieve" / "data",
    )
    parser.add_argument("--seed", type=int, default=20240511)
    parser.add_argument("--images", type=int, default=40)
    parser.add_argument("--eval-images", type=int, default=12)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    args.output_dir.mkdir(parents=True, exist_ok=True)

    corpus = make_corpus(rng, args.images)
    write_jsonl(args.output_dir / "toy_corpus.jsonl", corpus)
    n_comments = sum(len(im["comments"]) for im in corpus)
    print(f"toy_corpus.jsonl: {len(corpus)} images, {n_comments} comments")

    candidates, references = make_metric_files(rng, args.eval_images)
    write_jsonl(args.output_dir / "toy_candidates.jsonl", candidates)
    write_jsonl(args.output_dir / "toy_references.jsonl", references)
    print(f"toy_candidates.jsonl / toy_references.jsonl: {len(candidates)} images")


if __name__ == "__main__":
    main()
