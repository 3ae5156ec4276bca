"""Regenerate the bundled example data.

The four CSV files under src/graphontest/data/ are synthetic stand-ins for
group-averaged functional coactivation networks over 116 brain regions: a
weighted symmetric matrix per group whose binarization at the conventional
0.4 threshold has a global density around 30%. The 'asd' and 'td' groups are
drawn from structurally different smooth graphons; 'td_sub1' and 'td_sub2'
are independent draws from the same (TD) graphon, so a structural test
should separate asd-vs-td but not the two subgroups.

Run from the repository root:  python scripts/make_example_data.py
"""

import csv
from pathlib import Path

import numpy as np

from graphontest.core import GridGraphon
from graphontest.simulate import sample_graph, sample_positions, three_group_graphon

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "graphontest" / "data"
N_REGIONS = 116

ASD_BLOCKS = np.array(
    [
        [0.55, 0.18, 0.10],
        [0.18, 0.40, 0.18],
        [0.10, 0.18, 0.68],
    ]
)


def weighted_from_graph(graph, rng):
    """Correlation-style weights consistent with the binary structure:
    edges strictly above the 0.4 threshold, non-edges strictly below."""
    n = graph.n
    w = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    strength = rng.beta(2.0, 2.0, iu.shape[0])
    present = graph.adj[iu, ju].astype(bool)
    vals = np.where(present, 0.45 + 0.35 * strength, 0.38 * strength)
    w[iu, ju] = w[ju, iu] = np.round(vals, 6)
    np.fill_diagonal(w, 1.0)
    return w


def write_matrix(path, w):
    labels = [f"R{i + 1:03d}" for i in range(w.shape[0])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(labels)
        for row in w:
            writer.writerow([f"{x:.6f}" for x in row])


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    td_truth = three_group_graphon()
    asd_truth = GridGraphon(ASD_BLOCKS, mode="bilinear")
    specs = [
        ("asd.csv", asd_truth, 200),
        ("td.csv", td_truth, 100),
        ("td_sub1.csv", td_truth, 300),
        ("td_sub2.csv", td_truth, 400),
    ]
    for name, truth, seed in specs:
        rng = np.random.default_rng(seed)
        pos = sample_positions(N_REGIONS, rng)
        graph = sample_graph(truth, pos, rng)
        w = weighted_from_graph(graph, np.random.default_rng(seed + 7))
        write_matrix(DATA_DIR / name, w)
        print(f"{name}: density {graph.density():.3f}")


if __name__ == "__main__":
    main()
