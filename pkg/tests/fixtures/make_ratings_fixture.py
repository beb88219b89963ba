"""Regenerates ratings_synthetic.csv (seeded, so the output is stable).

Two configurations of the same model, with the retrieval-augmented one
shifted upward on every quality score so the ablation comes out clearly
significant. Run from the repository root:

    python tests/fixtures/make_ratings_fixture.py
"""
import csv
import random
from pathlib import Path

OUT = Path(__file__).parent / "ratings_synthetic.csv"

HEADER = [
    "sample_id", "config_id", "annotator_id", "comprehended",
    "inacc_name", "inacc_value", "inacc_definition", "inacc_affordance",
    "inacc_unit", "def_rating", "aff_rating", "helpfulness", "overall",
]


def flag(rng, p):
    return "true" if rng.random() < p else "false"


def score(rng, weights):
    return str(rng.choices([1, 2, 3, 4, 5], weights=weights)[0])


def rows_for(rng, config_id, n, flag_p, score_weights, help_weights):
    rows = []
    for i in range(n):
        comprehended = rng.random() < 0.7
        helpfulness = "" if comprehended else score(rng, help_weights)
        rows.append([
            f"P{i + 1:03d}",
            config_id,
            f"a{rng.randint(1, 7)}",
            "true" if comprehended else "false",
            flag(rng, flag_p / 3),
            flag(rng, flag_p / 3),
            flag(rng, flag_p),
            flag(rng, flag_p),
            flag(rng, flag_p / 2),
            score(rng, score_weights),
            score(rng, score_weights),
            helpfulness,
            score(rng, score_weights),
        ])
    return rows


def main():
    rng = random.Random(20240617)
    rows = []
    rows += rows_for(rng, "llama2:norag", 120, flag_p=0.30,
                     score_weights=[8, 14, 22, 30, 26], help_weights=[10, 20, 30, 25, 15])
    rows += rows_for(rng, "llama2:rag", 120, flag_p=0.08,
                     score_weights=[1, 3, 8, 25, 63], help_weights=[2, 4, 14, 30, 50])
    with open(OUT, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
