"""Smoke test for the speckle_dop extension module.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, or
`cargo build --release -p dop-python --features extension-module` and copy
target/release/libspeckle_dop.so next to this script as speckle_dop.so.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import speckle_dop as sd


def main():
    mats = dict(sd.paper_matrices())
    truth = {name: m.p2() for name, m in mats.items()}
    assert abs(truth["G5"] - 0.7933884297520662) < 1e-12, truth

    g5 = mats["G5"]
    delta12, centered = g5.intensity_correlation()
    assert abs(centered - 320.0) < 1e-9
    eta2 = ((30.0 - 14.0) / 44.0) ** 2
    assert abs(sd.osci_correction(eta2, centered, 30.0, 14.0) - truth["G5"]) < 1e-12

    mu1, mu2 = sd.CoherencyMatrix(16.0, 0j, 3.6).eigenvalues()
    assert (mu1, mu2) == (16.0, 3.6)

    try:
        sd.CoherencyMatrix(-1.0, 0j, 1.0)
    except ValueError as e:
        assert "positive semidefinite" in str(e)
    else:
        raise AssertionError("negative a1 accepted")

    i1, i2, cross = sd.sample_records(g5, 200_000, seed=1, keep_cross=True)
    four = sd.estimate_p2(i1, i2, "four_image", cross)
    pair = sd.estimate_p2(i1, i2, "correlated_pair")
    osci = sd.estimate_p2(i1, i2, "osci")
    assert abs(four["p2_hat"] - truth["G5"]) < 0.01, four
    assert abs(pair["p2_hat"] - truth["G5"]) < 0.05, pair
    assert abs(osci["p2_hat"] - eta2) < 0.01, osci

    cells = sd.run_campaign([("G2", mats["G2"])], [1000], 20, seed=3, workers=2)
    assert len(cells) == 3
    for c in cells:
        assert math.isfinite(c["mean_p2"]) and c["var_p2"] >= 0.0
        assert c["n_times_var"] == 1000 * c["var_p2"]

    assert sd.variance_statistics([0.0, 1.0], 10) == (0.5, 0.5, 5.0)

    p2, counts = sd.estimate_map([2.0] * 25, [2.0] * 25, 5, 5, 3, "correlated_pair")
    assert all(v == 0.0 for v in p2) and counts[0] == 4 and counts[12] == 9

    print("speckle_dop smoke test: ok")


if __name__ == "__main__":
    main()
