import math

import numpy as np
import pytest

from gasp.cues import (
    FaceDetection,
    DetectionRecord,
    ModalityClip,
    WINDOW_TABLE,
    cone_gray,
    cone_layer,
    decode_ppm,
    encode_ppm,
    fer_gray,
    gf_gray,
    hann,
    hanning2d,
    jet_colormap,
    read_jsonl,
    render_cone_map,
    render_fer_map,
    render_gf_map,
    resize_bilinear,
    standardize_clip,
    window_sequence,
    write_jsonl,
)
from gasp.cues import colormap, render


def face(bbox, az=0.0, pitch=0.0, conf=1.0, grid=None, heatmap=None):
    return FaceDetection(bbox, (az, pitch, conf), np.ones((5, 5)) if grid is None else grid, heatmap)


# -- jet ------------------------------------------------------------------------

@pytest.mark.parametrize(
    "v,rgb",
    [(0.0, (0.0, 0.0, 0.5)), (1.0, (0.5, 0.0, 0.0)), (0.5, (0.5, 1.0, 0.5))],
)
def test_jet_reference_points(v, rgb):
    np.testing.assert_allclose(jet_colormap(np.array([[v]]))[:, 0, 0], rgb, atol=1e-15)


def test_jet_clamps_and_counts():
    before = colormap.clamp_events
    out = jet_colormap(np.array([[-0.5, 1.5]]))
    np.testing.assert_allclose(out[:, 0, 0], jet_colormap(np.zeros((1, 1)))[:, 0, 0])
    np.testing.assert_allclose(out[:, 0, 1], jet_colormap(np.ones((1, 1)))[:, 0, 0])
    assert colormap.clamp_events == before + 1


# -- Hann -----------------------------------------------------------------------

def test_hann_closed_form():
    np.testing.assert_allclose(hann(5), [0.0, 0.5, 1.0, 0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(hann(7), np.hanning(7), atol=1e-15)


def test_hanning2d_center_and_border():
    win = hanning2d(5, 7)
    assert win[2, 3] == pytest.approx(1.0)
    assert np.all(win[0] == 0) and np.all(win[-1] == 0)
    assert np.all(win[:, 0] == 0) and np.all(win[:, -1] == 0)


def test_hanning2d_is_outer_product():
    win = hanning2d(5, 3)
    for i in range(5):
        for j in range(3):
            assert win[i, j] == hann(5)[i] * hann(3)[j]


# -- cone -----------------------------------------------------------------------

def test_cone_axis_inside_and_45_degrees_outside():
    f = face((50, 50, 20, 20))  # centroid (60, 60)
    mask, _ = cone_layer(120, 120, f.centroid, (1.0, 0.0), 1.0)
    r = 10
    assert mask[60, 60 + r]
    assert not mask[60 + r, 60 + r]  # 45 degrees off-axis
    gray = cone_gray(120, 120, [f])
    assert gray[60, 70] > 0 and gray[70, 70] == 0


def test_cone_intensity_falls_to_fifth_at_border():
    mask, inten = cone_layer(121, 121, (60.0, 60.0), (1.0, 0.0), 0.8)
    assert inten[60, 60] == pytest.approx(0.8)
    assert inten[60, 120] == pytest.approx(0.16)
    assert inten[60, 90] == pytest.approx(0.8 * (1 - 0.8 * 0.5))


def test_cone_membership_rejection_sampling():
    rng = np.random.default_rng(0)
    apex, direction = (47.3, 61.8), (math.cos(0.7), math.sin(0.7))
    mask, _ = cone_layer(120, 120, apex, direction, 1.0)
    pts = rng.uniform(-0.5, 119.5, size=(200_000, 2))
    dx, dy = pts[:, 0] - apex[0], pts[:, 1] - apex[1]
    ang = np.arccos(np.clip((dx * direction[0] + dy * direction[1]) / np.hypot(dx, dy), -1, 1))
    analytic = ang <= math.radians(30)
    raster = mask[np.round(pts[:, 1]).astype(int), np.round(pts[:, 0]).astype(int)]
    disagree = np.mean(analytic != raster)
    mask_share = mask.mean()
    assert disagree / mask_share < 0.02


def test_cone_zero_projection_draws_nothing():
    f = face((50, 50, 20, 20), az=math.pi / 2, pitch=0.0)
    assert cone_gray(120, 120, [f]).max() == 0


def test_empty_faces_give_jet_zero():
    expected = jet_colormap(np.zeros((24, 24)))
    for fn in (render_cone_map, render_gf_map, render_fer_map):
        np.testing.assert_array_equal(fn(24, 24, []), expected)


def test_cone_equal_area_is_deterministic():
    faces = [face((10, 10, 20, 20), az=0.0), face((80, 80, 20, 20), az=math.pi, conf=0.6)]
    a = render_cone_map(120, 120, faces)
    b = render_cone_map(120, 120, list(faces))
    assert a.tobytes() == b.tobytes()


def test_cone_composite_smaller_face_drawn_first():
    # two overlapping cones: the nearer (larger) face is painted last with alpha 0.75
    small = face((10, 55, 4, 4), az=0.0, conf=1.0)
    large = face((10, 50, 20, 20), az=0.0, conf=0.5)
    m_s, i_s = cone_layer(120, 120, small.centroid, (1.0, 0.0), 1.0)
    m_l, i_l = cone_layer(120, 120, large.centroid, (1.0, 0.0), 0.5)
    canvas = np.zeros((120, 120))
    canvas[m_s] = 0.5 * i_s[m_s]
    canvas[m_l] = 0.25 * canvas[m_l] + 0.75 * i_l[m_l]
    expected = (canvas - canvas.min()) / (canvas.max() - canvas.min())
    np.testing.assert_allclose(cone_gray(120, 120, [large, small]), expected, atol=1e-12)


def test_degenerate_bbox_skipped_and_counted():
    before = render.skipped_faces
    out = cone_gray(24, 24, [face((5, 5, 0, 4))])
    assert out.max() == 0
    assert render.skipped_faces == before + 1


# -- gaze-following map ---------------------------------------------------------

def test_gf_delta_heatmap_single_blob():
    hm = np.zeros((12, 12))
    hm[3, 8] = 1.0
    gray = gf_gray(24, 24, [face((0, 0, 4, 4), heatmap=hm)])
    r, c = np.unravel_index(gray.argmax(), gray.shape)
    assert abs(r - (3 + 0.5) * 2 + 0.5) <= 1 and abs(c - (8 + 0.5) * 2 + 0.5) <= 1
    assert gray.max() == 1.0


def test_gf_mean_idempotent():
    rng = np.random.default_rng(1)
    hm = rng.uniform(size=(24, 24))
    one = gf_gray(24, 24, [face((0, 0, 4, 4), heatmap=hm)])
    two = gf_gray(24, 24, [face((0, 0, 4, 4), heatmap=hm), face((5, 5, 4, 4), heatmap=hm.copy())])
    np.testing.assert_allclose(one, two, atol=1e-15)


def test_gf_without_heatmaps_is_zero():
    assert gf_gray(24, 24, [face((0, 0, 4, 4))]).max() == 0


# -- affect map -----------------------------------------------------------------

def test_fer_constant_grid_is_hann_blob():
    gray = fer_gray(40, 40, [face((10, 10, 9, 9), grid=np.full((4, 4), 2.0))])
    patch = gray[10:19, 10:19]
    np.testing.assert_allclose(patch, hanning2d(9, 9), atol=1e-12)
    assert gray.sum() == pytest.approx(hanning2d(9, 9).sum())


def test_fer_disjoint_faces_are_independent_blobs():
    g = np.full((3, 3), 1.0)
    f1, f2 = face((2, 2, 7, 7), grid=g), face((20, 20, 7, 7), grid=0.5 * g)
    both = fer_gray(32, 32, [f1, f2])
    np.testing.assert_allclose(both[2:9, 2:9], hanning2d(7, 7), atol=1e-12)
    np.testing.assert_allclose(both[20:27, 20:27], 0.5 * hanning2d(7, 7), atol=1e-12)


def test_render_is_deterministic_and_three_channel():
    rng = np.random.default_rng(2)
    faces = [face((3, 4, 6, 6), az=0.3, pitch=0.2, conf=0.7, grid=rng.uniform(size=(7, 7)), heatmap=rng.uniform(size=(24, 24)))]
    for fn in (render_cone_map, render_gf_map, render_fer_map):
        a, b = fn(24, 24, faces), fn(24, 24, faces)
        assert a.shape == (3, 24, 24)
        assert a.tobytes() == b.tobytes()
        assert np.isfinite(a).all() and a.min() >= 0 and a.max() <= 1


# -- windowing (hand-simulated emissions, frames f0..f9) --------------------------

HAND_SIMULATED = {
    "SP": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    "GE": [0, 0, 0, 1, 2, 3, 4, 5, 6, 7],
    "GF": [0, 0, 0, 0, 0, 1, 2, 3, 4, 5],
    "FER": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
}


@pytest.mark.parametrize("modality", sorted(HAND_SIMULATED))
def test_window_emissions(modality):
    assert window_sequence(modality, list(range(10))) == HAND_SIMULATED[modality]


def test_window_table_values():
    assert WINDOW_TABLE == {"SP": (15, 15), "GE": (7, 4), "GF": (5, 0), "FER": (0, 0)}


# -- resize and standardisation ---------------------------------------------------

def test_resize_identity_and_constant():
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(7, 9))
    np.testing.assert_array_equal(resize_bilinear(x, 7, 9), x)
    np.testing.assert_allclose(resize_bilinear(np.full((5, 5), 0.3), 13, 8), 0.3, atol=1e-15)


def test_resize_upsampled_ramp_is_linear():
    n = 8
    ramp = np.tile(2.0 * np.arange(n) + 1.0, (4, 1))
    out = resize_bilinear(ramp, 8, 2 * n)
    src = np.clip((np.arange(2 * n) + 0.5) / 2 - 0.5, 0, n - 1)
    np.testing.assert_allclose(out, np.tile(2.0 * src + 1.0, (8, 1)), atol=1e-9)
    # interior spacing is exactly half the input slope
    np.testing.assert_allclose(np.diff(out[0, 1:-1]), 1.0, atol=1e-9)


def test_standardize_clip():
    rng = np.random.default_rng(4)
    clip = ModalityClip("GE", rng.uniform(size=(4, 3, 6, 6)) * 5 + 2)
    s = standardize_clip(clip)
    assert s.standardized and not s.degenerate
    assert abs(s.frames.mean()) < 1e-9
    assert s.frames.std() == pytest.approx(1.0, abs=1e-6)
    again = standardize_clip(s)
    np.testing.assert_allclose(again.frames, s.frames, atol=1e-9)


def test_standardize_constant_clip_is_zero_and_flagged():
    s = standardize_clip(ModalityClip("FER", np.full((2, 3, 4, 4), 0.5)))
    assert s.degenerate and not s.frames.any()


def test_modality_clip_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ModalityClip("GE", np.zeros((2, 1, 4, 4)))
    with pytest.raises(ValueError):
        ModalityClip("XYZ", np.zeros((2, 3, 4, 4)))


# -- record I/O and PPM -------------------------------------------------------------

def test_jsonl_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    recs = [
        DetectionRecord(0, [face((1.25, 2.5, 3.0, 4.0), 0.1, -0.2, 0.9, rng.uniform(size=(3, 3)), rng.uniform(size=(4, 4)))]),
        DetectionRecord(1, []),
    ]
    path = tmp_path / "d.jsonl"
    write_jsonl(path, recs)
    back = read_jsonl(path)
    assert len(path.read_text().splitlines()) == 2
    assert back[0].faces[0].bbox == recs[0].faces[0].bbox
    np.testing.assert_array_equal(back[0].faces[0].expression_grid, recs[0].faces[0].expression_grid)
    np.testing.assert_array_equal(back[0].faces[0].gaze_target_heatmap, recs[0].faces[0].gaze_target_heatmap)
    assert back[1].faces == []


def test_record_validation():
    rec = DetectionRecord(0, [face((20, 20, 10, 10), conf=1.5)])
    problems = rec.validate(24, 24)
    assert len(problems) == 2


def test_ppm_roundtrip():
    rgb = jet_colormap(np.linspace(0, 1, 12).reshape(3, 4))
    blob = encode_ppm(rgb)
    assert blob.startswith(b"P6\n4 3\n255\n")
    px = decode_ppm(blob)
    assert px.shape == (3, 4, 3)
    assert tuple(px[0, 0]) == (0, 0, 128)
