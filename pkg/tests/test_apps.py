import math

import numpy as np
import pytest

from hankelrecon.apps import (
    KSpaceVolume,
    MRIConfig,
    RowFailure,
    RowSolver,
    Spectrum2D,
    fft_c,
    gaussian_phantom,
    ifft_c,
    image_to_kspace,
    kspace_to_image,
    read_pgm,
    reconstruct_mri,
    reconstruct_nmr,
    rsos,
    solve_row,
    write_pgm,
)
from hankelrecon.metrics import pearson_r2, rlne
from hankelrecon.pipeline import MRI_BLOCKS, BlockParams
from hankelrecon.sampling import apply_U, cartesian_1d, full, poisson_gap
from hankelrecon.signal_model import synthesize, table_signal
from tests.helpers import crandn

PEAKS_2D = ((1.0, 0.15, 0.2), (0.7, 0.4, 0.55), (0.5, 0.7, 0.35), (0.8, 0.85, 0.8))


def synth_2d(n1=32, n2=64):
    """Sum of 2D damped exponentials: every row is low rank along the indirect axis."""
    t1, t2 = np.arange(n1)[:, None], np.arange(n2)[None, :]
    x = np.zeros((n1, n2), dtype=complex)
    for a, f1, f2 in PEAKS_2D:
        x += a * np.exp((2j * np.pi * f1 - 1 / 20) * t1) * np.exp((2j * np.pi * f2 - 1 / 30) * t2)
    return x


def test_rsos_cases(rng):
    img = np.zeros((1, 1, 2), dtype=complex)
    img[0, 0] = [3.0, 4.0j]
    assert rsos(img)[0, 0] == 5.0
    single = crandn(rng, 5, 6, 1)
    np.testing.assert_allclose(rsos(single), np.abs(single[..., 0]))
    multi = crandn(rng, 5, 6, 3)
    phased = multi * np.exp(1j * np.array([0.3, 2.0, -1.0]))
    np.testing.assert_allclose(rsos(phased), rsos(multi), rtol=1e-14)
    assert np.all(rsos(multi) >= 0)
    with pytest.raises(ValueError):
        rsos(np.zeros((3, 3, 0)))


def test_centered_fft_is_unitary(rng):
    a = crandn(rng, 16, 12, 2)
    np.testing.assert_allclose(ifft_c(fft_c(a, 0), 0), a, atol=1e-14)
    assert np.linalg.norm(image_to_kspace(a)) == pytest.approx(np.linalg.norm(a))
    np.testing.assert_allclose(kspace_to_image(image_to_kspace(a)), a, atol=1e-13)
    # a centred delta maps to a flat spectrum
    d = np.zeros(8)
    d[4] = 1.0
    np.testing.assert_allclose(fft_c(d, 0), np.full(8, 1 / math.sqrt(8)), atol=1e-15)


def test_container_validation():
    with pytest.raises(ValueError):
        KSpaceVolume(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        KSpaceVolume(np.zeros((4, 4, 0)))
    with pytest.raises(ValueError):
        Spectrum2D(np.zeros(5))
    s = Spectrum2D(np.zeros((3, 7)))
    assert (s.direct_dim, s.indirect_dim) == (3, 7)
    with pytest.raises(ValueError):
        reconstruct_nmr(s, full(6))
    with pytest.raises(ValueError):
        RowSolver("unet")


@pytest.mark.parametrize("name", ["penalty", "admm", "cs", "adlr", "svt"])
def test_nmr_full_pattern_passes_through(name, rng):
    x = crandn(rng, 3, 20)
    out = reconstruct_nmr(Spectrum2D(x), full(20), RowSolver(name))
    np.testing.assert_array_equal(out.data, x)


def test_nmr_identical_rows_give_identical_results():
    row = synthesize(table_signal("S2"))
    x = np.tile(row, (3, 1))
    pat = poisson_gap(255, 64, 0)
    out = reconstruct_nmr(Spectrum2D(x), pat, RowSolver("penalty", {"max_iters": 200}))
    errs = [rlne(row, r) for r in out.data]
    assert max(errs) - min(errs) <= 1e-10


def test_nmr_commutes_with_row_permutation():
    x = synth_2d(6, 40)
    pat = poisson_gap(40, 20, 1)
    solver = RowSolver("penalty", {"max_iters": 100})
    perm = np.array([3, 0, 5, 1, 4, 2])
    a = reconstruct_nmr(Spectrum2D(x), pat, solver).data
    b = reconstruct_nmr(Spectrum2D(x[perm]), pat, solver).data
    np.testing.assert_array_equal(a[perm], b)


def test_nmr_parallel_is_bit_identical():
    x = synth_2d(5, 40)
    pat = poisson_gap(40, 16, 2)
    solver = RowSolver("penalty", {"max_iters": 100})
    a = reconstruct_nmr(Spectrum2D(x), pat, solver, workers=1).data
    b = reconstruct_nmr(Spectrum2D(x), pat, solver, workers=3).data
    assert a.tobytes() == b.tobytes()


def test_nmr_peak_intensity_correlation():
    x = synth_2d()
    pat = poisson_gap(64, 32, 0)
    out = reconstruct_nmr(Spectrum2D(x), pat, RowSolver("penalty"))
    pos = tuple(np.array([(round(f1 * 32) % 32, round(f2 * 64) % 64) for _, f1, f2 in PEAKS_2D]).T)
    truth = np.abs(np.fft.fft2(x, norm="ortho"))[pos]
    recon = np.abs(np.fft.fft2(out.data, norm="ortho"))[pos]
    assert pearson_r2(truth, recon) >= 0.99


def test_solve_row_iteration_counts():
    x = synthesize(table_signal("S2"))[:63]
    pat = poisson_gap(63, 32, 0)
    _, it = solve_row(apply_U(x, pat), pat, RowSolver("penalty", {"max_iters": 7, "tol": 0}))
    assert it == 7
    _, it = solve_row(apply_U(x, pat), pat, RowSolver("adlr", {"blocks": MRI_BLOCKS}))
    assert it == 10
    _, it = solve_row(apply_U(x, full(63)), full(63), RowSolver("cs"))
    assert it == 0


def test_row_failure_carries_index():
    x = synth_2d(4, 20)
    x[2, 0] = np.nan
    with pytest.raises(RowFailure) as info:
        reconstruct_nmr(Spectrum2D(x), poisson_gap(20, 10, 0), RowSolver("penalty", {"max_iters": 5}))
    assert info.value.row == 2 and "row 2" in str(info.value)


def phantom_volume(size=32, seed=0):
    return KSpaceVolume(image_to_kspace(gaussian_phantom(size, 2, seed)))


def test_mri_full_pattern_matches_direct_rsos():
    vol = phantom_volume()
    k, img = reconstruct_mri(vol, full(32))
    direct = rsos(kspace_to_image(vol.data))
    assert rlne(direct, img) < 1e-8
    assert k.data.shape == vol.data.shape


def test_mri_pipeline_on_full_rows_stays_close():
    from hankelrecon.hankel import VirtualCoilOperator, default_shape
    from hankelrecon.pipeline import PipelineConfig, run_pipeline

    row = ifft_c(phantom_volume().data, 0)[16]
    op = VirtualCoilOperator(default_shape(32), 2)
    res = run_pipeline(row, full(32), PipelineConfig(blocks=MRI_BLOCKS, rank_cap=17), op=op)
    assert rlne(row, res.x) < 1e-6


def test_mri_huge_gamma_preserves_sampled_lines():
    vol = phantom_volume()
    pat = cartesian_1d(32, 0.4, 0.08, 0)
    blocks = tuple(BlockParams(1e12, 1e12, b.beta_p, b.beta_q) for b in MRI_BLOCKS)
    k, _ = reconstruct_mri(vol, pat, MRIConfig(blocks=blocks))
    ref = np.max(np.abs(vol.data))
    assert np.max(np.abs(k.data[:, pat.omega] - vol.data[:, pat.omega])) < 1e-6 * ref


def test_mri_improves_on_zero_filling():
    vol = phantom_volume()
    pat = cartesian_1d(32, 0.4, 0.08, 0)
    truth = rsos(kspace_to_image(vol.data))
    zf = np.zeros_like(vol.data)
    zf[:, pat.omega] = vol.data[:, pat.omega]
    _, img = reconstruct_mri(vol, pat)
    assert rlne(truth, img) < rlne(truth, rsos(kspace_to_image(zf)))


def test_mri_parallel_and_validation():
    vol = phantom_volume(16)
    pat = cartesian_1d(16, 0.5, 0.1, 0)
    a = reconstruct_mri(vol, pat, workers=1)[1]
    b = reconstruct_mri(vol, pat, workers=2)[1]
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        reconstruct_mri(vol, full(15))


def test_phantom_is_deterministic():
    a, b = gaussian_phantom(24, 2, 5), gaussian_phantom(24, 2, 5)
    assert a.shape == (24, 24, 2) and np.array_equal(a, b)
    assert not np.array_equal(a, gaussian_phantom(24, 2, 6))


def test_pgm_round_trip(tmp_path, rng):
    img = np.abs(rng.standard_normal((7, 9)))
    img[0, 0] = 0.0
    write_pgm(tmp_path / "a.pgm", img)
    back = read_pgm(tmp_path / "a.pgm")
    assert back.shape == (7, 9) and back.max() == 65535 and back[0, 0] == 0
    np.testing.assert_allclose(back / 65535, img / img.max(), atol=1 / 65535)
    (tmp_path / "b.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "b.pgm")
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "c.pgm", np.zeros(3))
