"""Quick end-to-end check of the wavetex_py extension module.

Build and install it first, for example:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml --release

then run ``python python/smoke_test.py``.
"""

import json

import numpy as np

import wavetex_py as wt


def micro_texture(n, seed):
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-0.5, 0.5, (n, n))
    w = 2 * np.pi * np.fft.fftfreq(n)
    g = np.exp(-2 * (w[:, None] ** 2 + w[None, :] ** 2))
    y = np.fft.ifft2(np.fft.fft2(noise) * g).real
    return (y - y.min()) / (y.max() - y.min())


def main():
    n = 32
    cfg = wt.BankConfig(size=n, scales=2, orientations=4, angular=4)
    bank = wt.FilterBank(cfg)
    lower, upper = bank.frame_bounds()
    assert abs(lower - 1) < 1e-9 and abs(upper - 1) < 1e-9, (lower, upper)
    assert bank.lp_violations() == 0
    assert bank.spectrum("lowpass").shape == (n, n)
    assert "psi_e_j0_m0" in bank.keys()

    banks = wt.Banks(cfg)
    x = np.random.default_rng(0).uniform(size=(n, n))
    coeffs = wt.forward_u1(x, banks)
    assert np.allclose(coeffs.invert(banks), x, atol=1e-9)
    key = "psi_e_j0_m0"
    linear = coeffs.get(key + "+") - coeffs.get(key + "-")
    assert np.allclose(np.fft.ifft2(np.fft.fft2(x) * bank.spectrum(key)).real, linear, atol=1e-9)
    assert np.allclose(wt.u2_round_trip(x, banks), x, atol=1e-9)

    reference = micro_texture(n, 1)
    p = wt.profile(reference, banks)
    q = wt.Profile.from_json(p.to_json())
    assert wt.relative_loss(p, q) == (0.0, 0.0)

    image, history = wt.synthesize(reference, cfg, layers=2, iters1=5, iters2=2, seed=3)
    assert image.shape == (n, n) and len(history) == 7
    assert history[-1][0] == 7 and history[-1][2] is not None

    matched = wt.match_pixel_stats(x, reference)
    assert abs(matched.mean() - reference.mean()) < 1e-10

    per, smooth = wt.periodic_smooth(reference)
    assert np.allclose(per + smooth, reference, atol=1e-10)

    report = json.loads(wt.theorem1_report())
    assert report["passed"], report["checks"]

    print("smoke test passed: loss1 %.3e after %d iterations" % (history[-1][1], len(history)))


if __name__ == "__main__":
    main()
