import math

import numpy as np
import pytest
from scipy import fft as sp_fft

from logblob.logfilter import (
    SubvoxelScaleWarning,
    iter_responses,
    log_spectrum,
    respond_all_scales,
    sample_log_kernel,
)
from logblob.phantom import Scene, Sphere, rasterize
from logblob.scaleplan import build_plan
from logblob.volume import Volume3D, load_volume


def unit_freqs(n):
    w = 2.0 * math.pi
    return (w * np.fft.fftfreq(n, 1.0), w * np.fft.fftfreq(n, 1.0), w * np.fft.rfftfreq(n, 1.0))


class TestLogSpectrum:
    def test_dc_term_vanishes(self):
        spec = log_spectrum(unit_freqs(16), 2.0)
        assert spec[0, 0, 0] == 0.0
        aliased = log_spectrum(unit_freqs(16), 0.7, spacing_mm=(1.0, 1.0, 1.0))
        assert aliased[0, 0, 0] == 0.0

    def test_real_and_nonpositive(self):
        for sigma in (0.6, 1.0, 3.0):
            spec = log_spectrum(unit_freqs(20), sigma)
            assert np.isrealobj(spec)
            assert np.all(spec <= 0.0)
            aliased = log_spectrum(unit_freqs(20), sigma, spacing_mm=(1.0, 1.0, 1.0))
            assert np.all(aliased <= 0.0)

    @pytest.mark.parametrize("sigma", [1.5, 2.0, 4.0])
    def test_inverse_transform_matches_sampled_kernel(self, sigma):
        n = 64
        spec = log_spectrum(unit_freqs(n), sigma)
        kern = np.fft.fftshift(sp_fft.irfftn(-sigma * sigma * spec, s=(n, n, n)))
        ref = sample_log_kernel(sigma, (1.0, 1.0, 1.0), radius_sigmas=6.0)
        h = ref.shape[0] // 2
        c = n // 2
        cut = kern[c - h:c + h + 1, c - h:c + h + 1, c - h:c + h + 1]
        assert np.max(np.abs(cut - ref)) <= 1e-4 * np.max(np.abs(ref))

    def test_aliased_form_matches_continuous_at_large_sigma(self):
        plain = log_spectrum(unit_freqs(32), 3.0)
        aliased = log_spectrum(unit_freqs(32), 3.0, spacing_mm=(1.0, 1.0, 1.0))
        assert np.max(np.abs(plain - aliased)) < 1e-12

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            log_spectrum(unit_freqs(8), 0.0)


class TestRespondAllScales:
    def test_matches_spatial_convolution_oracle(self, random48_match):
        for index, err in random48_match["errors"].items():
            assert err <= 1e-3, f"scale {index}: {err:.2e}"

    def test_sphere_peaks_at_matching_scale(self, plan):
        d = plan.entry(7).diameter_mm  # 12.33 mm
        vol = rasterize(Scene((64,) * 3, (1.0,) * 3, 0.0, (Sphere((32.0,) * 3, d, 1.0),)),
                        supersample=3)
        stack = respond_all_scales(vol, plan)
        center = [stack.response(e.index)[32, 32, 32] for e in plan.entries]
        assert 0.88 <= center[7] <= 0.95
        assert int(np.argmax(center)) == 7

    def test_zero_volume_yields_zero_stack(self, plan):
        vol = Volume3D((24,) * 3, (1.0,) * 3, np.zeros((24,) * 3))
        stack = respond_all_scales(vol, plan)
        assert all(float(np.abs(r).max()) == 0.0 for r in stack.responses)

    def test_linearity(self, plan):
        rng = np.random.default_rng(9)
        a, b = rng.standard_normal((2, 24, 24, 24))
        mix = Volume3D((24,) * 3, (1.0,) * 3, 2.5 * a - 1.25 * b)
        va = Volume3D((24,) * 3, (1.0,) * 3, a)
        vb = Volume3D((24,) * 3, (1.0,) * 3, b)
        sm = respond_all_scales(mix, plan)
        sa = respond_all_scales(va, plan)
        sb = respond_all_scales(vb, plan)
        for e in plan.interior:
            want = 2.5 * sa.response(e.index) - 1.25 * sb.response(e.index)
            got = sm.response(e.index)
            scale = np.max(np.abs(got))
            assert np.max(np.abs(got - want)) <= 1e-6 * scale

    def test_intensity_scaling_doubles_response(self, plan):
        d = plan.entry(5).diameter_mm
        base = rasterize(Scene((48,) * 3, (1.0,) * 3, 0.0, (Sphere((24.0,) * 3, d, 1.0),)),
                         supersample=2)
        bright = Volume3D(base.dims, base.spacing_mm, 2.0 * base.data)
        r1 = respond_all_scales(base, plan).response(5)[24, 24, 24]
        r2 = respond_all_scales(bright, plan).response(5)[24, 24, 24]
        assert r2 == pytest.approx(2.0 * r1, rel=1e-9)

    def test_shift_equivariance_away_from_margins(self):
        plan = build_plan(3.0, 9.0, 4)
        rng = np.random.default_rng(10)
        block = rng.uniform(0.0, 1.0, (10, 10, 10))
        base = np.zeros((64,) * 3)
        moved = np.zeros((64,) * 3)
        base[20:30, 22:32, 24:34] = block
        shift = (3, 1, 2)
        moved[23:33, 23:33, 26:36] = block
        sb = respond_all_scales(Volume3D((64,) * 3, (1.0,) * 3, base), plan)
        sm = respond_all_scales(Volume3D((64,) * 3, (1.0,) * 3, moved), plan)
        m = 18  # margin clear of both structures' padding interactions
        for e in plan.interior:
            want = sb.response(e.index)[m:44, m:44, m:44]
            got = sm.response(e.index)[m + shift[0]:44 + shift[0],
                                       m + shift[1]:44 + shift[1],
                                       m + shift[2]:44 + shift[2]]
            assert np.max(np.abs(got - want)) <= 1e-9 * max(np.max(np.abs(want)), 1e-12)

    def test_point_structure_support_is_bounded(self, plan):
        imp = np.zeros((96,) * 3)
        imp[48, 48, 48] = 1.0
        stack = respond_all_scales(Volume3D((96,) * 3, (1.0,) * 3, imp), plan)
        xs = np.arange(96.0) - 48.0
        r2 = xs[:, None, None] ** 2 + xs[None, :, None] ** 2 + xs[None, None, :] ** 2
        for e in plan.entries:
            resp = stack.response(e.index)
            peak = resp[48, 48, 48]
            # the kernel itself is 13/3*exp(-8) ~ 1.45e-3 of its peak right
            # at 4 sigma and falls below 1e-3 past about 4.12 sigma
            beyond4 = np.abs(resp[r2 > (4.0 * e.sigma_mm) ** 2])
            assert beyond4.max() <= 1.5e-3 * peak
            beyond42 = np.abs(resp[r2 > (4.2 * e.sigma_mm) ** 2])
            assert beyond42.max() <= 1e-3 * peak

    def test_constant_input_interior_response_is_null(self, plan):
        # zero-embedding keeps pad-edge effects within ~4.6 sigma_max of the
        # border; beyond that every interior scale must ignore a constant
        vol = Volume3D((112,) * 3, (1.0,) * 3, np.full((112,) * 3, 1.0))
        stack = respond_all_scales(vol, plan)
        m = 48
        for e in plan.interior:
            inner = stack.response(e.index)[m:-m, m:-m, m:-m]
            assert float(np.abs(inner).max()) <= 1e-4

    def test_streaming_matches_retained_stack(self, plan):
        rng = np.random.default_rng(12)
        vol = Volume3D((20,) * 3, (1.0,) * 3, rng.standard_normal((20,) * 3))
        stack = respond_all_scales(vol, plan)
        for index, resp in iter_responses(vol, plan):
            assert np.array_equal(resp, stack.response(index))

    def test_subvoxel_sigma_warns_but_computes(self, plan):
        vol = Volume3D((16, 16, 16), (1.6, 1.0, 1.0), np.zeros((16, 16, 16)))
        with pytest.warns(SubvoxelScaleWarning):
            stack = respond_all_scales(vol, plan)
        assert len(stack.responses) == len(plan.entries)

    def test_insufficient_padding_rejected(self, plan):
        vol = Volume3D((8, 8, 8), (1.0, 1.0, 1.0), np.zeros((8, 8, 8)))
        with pytest.raises(ValueError, match="too small"):
            respond_all_scales(vol, plan, pad_mm=5.0)

    def test_anisotropic_kernel_is_spherical_in_mm(self, plan):
        # same physical scene sampled with 1 mm and with 0.5 mm z spacing
        d = plan.entry(6).diameter_mm
        iso = rasterize(Scene((48, 48, 48), (1.0, 1.0, 1.0), 0.0,
                              (Sphere((24.0, 24.0, 24.0), d, 1.0),)), supersample=4)
        fine = rasterize(Scene((48, 48, 96), (1.0, 1.0, 0.5), 0.0,
                               (Sphere((24.0, 24.0, 24.0), d, 1.0),)), supersample=4)
        r_iso = respond_all_scales(iso, plan).response(6)[24, 24, 24]
        r_fine = respond_all_scales(fine, plan).response(6)[24, 24, 48]
        assert r_fine == pytest.approx(r_iso, rel=0.01)

    def test_worker_env_cap(self, plan, monkeypatch):
        from logblob.logfilter import _effective_workers

        monkeypatch.setenv("LOGBLOB_MAX_WORKERS", "1")
        assert _effective_workers(8) == 1
        assert _effective_workers(None) == 1
        monkeypatch.delenv("LOGBLOB_MAX_WORKERS")
        assert _effective_workers(3) == 3

    def test_scale_dump_roundtrip(self, plan, tmp_path):
        rng = np.random.default_rng(13)
        vol = Volume3D((16,) * 3, (1.0,) * 3, rng.standard_normal((16,) * 3))
        stack = respond_all_scales(vol, plan)
        stack.save_scale(5, tmp_path / "resp5.json")
        back = load_volume(tmp_path / "resp5.json")
        assert np.allclose(back.data, stack.response(5), atol=1e-4)
