#!/usr/bin/env python3
"""Generate the two synthetic demo datasets used in the README walkthrough.

- communities.csv: 20 quantitative attributes with planted inverse
  correlations (attr_00/attr_01 follow a latent factor, attr_02/attr_03 its
  negation), good for pairwise collections and drag-a-plot queries.
- playbyplay.csv: court coordinates plus event/shot/team categories, good
  for category-split collections and region queries.
"""

import argparse
from pathlib import Path

import numpy as np

SHOT_TYPES = ["dunk", "hook shot", "jump shot", "layup", "tip shot"]
EVENT_TYPES = ["free throw", "rebound", "shot"]
TEAMS = ["Bulldogs", "Eagles", "Tigers", "Wildcats"]


def communities_csv(rows: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    latent = rng.normal(0, 1, rows)
    cols = []
    for j in range(20):
        if j in (0, 1):
            col = latent + rng.normal(0, 0.25, rows) + j
        elif j in (2, 3):
            col = -latent + rng.normal(0, 0.25, rows) + j
        else:
            col = rng.normal(0, 1, rows) * (1 + j / 10)
        cols.append(col)
    names = ["attr_%02d" % j for j in range(20)]
    lines = [",".join(names)]
    for i in range(rows):
        lines.append(",".join("%.6f" % cols[j][i] for j in range(20)))
    return "\n".join(lines) + "\n"


def playbyplay_csv(rows: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    lines = ["event_coord_x,event_coord_y,event_type,shot_type,team_name,points_scored"]
    for _ in range(rows):
        x, y = rng.uniform(0, 94), rng.uniform(0, 50)
        lines.append(
            "%.3f,%.3f,%s,%s,%s,%d"
            % (
                x,
                y,
                EVENT_TYPES[int(rng.integers(len(EVENT_TYPES)))],
                SHOT_TYPES[int(rng.integers(len(SHOT_TYPES)))],
                TEAMS[int(rng.integers(len(TEAMS)))],
                int(rng.integers(0, 4)),
            )
        )
    return "\n".join(lines) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", type=Path, default=Path("fixtures"))
    parser.add_argument("--rows", type=int, default=400)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "communities.csv").write_text(communities_csv(args.rows, args.seed))
    (args.out / "playbyplay.csv").write_text(playbyplay_csv(args.rows, args.seed))
    print("wrote %s and %s" % (args.out / "communities.csv", args.out / "playbyplay.csv"))


if __name__ == "__main__":
    main()
