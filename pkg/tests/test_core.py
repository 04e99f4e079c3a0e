import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gasp.core import (
    Adam,
    AdamState,
    NumericError,
    Parameter,
    ShapeError,
    Tensor,
    adam_step,
    batchnorm_temporal,
    conv2d,
    conv_transpose2d,
    grad_check,
    maxpool2d,
    pointwise,
    softmax_spatial,
)
from gasp.core import gtf


def _t(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# -- conv2d ---------------------------------------------------------------

def test_conv2d_all_ones_counts_overlap():
    x = Tensor(np.ones((1, 1, 3, 3)))
    w = Tensor(np.ones((1, 1, 3, 3)))
    out = conv2d(x, w, Tensor(np.zeros(1)), padding=1).data[0, 0]
    assert out[1, 1] == 9.0
    assert out[0, 0] == out[0, 2] == out[2, 0] == out[2, 2] == 4.0
    assert out[0, 1] == 6.0


def test_conv2d_zero_weight_gives_bias():
    rng = np.random.default_rng(0)
    out = conv2d(Tensor(rng.standard_normal((2, 3, 5, 5))), Tensor(np.zeros((4, 3, 3, 3))), Tensor(np.full(4, 0.7)), padding=1)
    np.testing.assert_array_equal(out.data, 0.7)


def test_conv2d_matches_direct_loop():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 3, 6, 5))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b), padding=1, stride=2).data
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    ho, wo = (6 + 2 - 3) // 2 + 1, (5 + 2 - 3) // 2 + 1
    assert out.shape == (2, 4, ho, wo)
    ref = np.zeros_like(out)
    for n in range(2):
        for o in range(4):
            for i in range(ho):
                for j in range(wo):
                    ref[n, o, i, j] = (xp[n, :, 2 * i : 2 * i + 3, 2 * j : 2 * j + 3] * w[o]).sum() + b[o]
    np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("k,stride,pad", [(3, 1, 1), (3, 1, 0), (1, 1, 0), (3, 2, 1), (2, 1, 1)])
def test_conv2d_gradcheck_linear_tolerance(k, stride, pad):
    rng = np.random.default_rng(2)
    x, w, b = _t(rng, 2, 3, 5, 5), _t(rng, 3, 3, k, k), _t(rng, 3)
    rep = grad_check(lambda: conv2d(x, w, b, padding=pad, stride=stride), [x, w, b], tolerance=1e-6)
    assert rep.passed, str(rep)


def test_conv2d_shape_errors():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((1, 3, 3, 3))))
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 3, 3))), padding=0)


# -- conv_transpose2d ------------------------------------------------------

def test_conv_transpose_identity_kernel():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((2, 3, 4, 4))
    w = np.eye(3).reshape(3, 3, 1, 1)
    out = conv_transpose2d(Tensor(x), Tensor(w), Tensor(np.zeros(3)), stride=1, padding=0)
    np.testing.assert_array_equal(out.data, x)


def test_conv_transpose_stride2_block():
    out = conv_transpose2d(Tensor(np.full((1, 1, 1, 1), 2.5)), Tensor(np.ones((1, 1, 2, 2))), stride=2)
    np.testing.assert_array_equal(out.data, np.full((1, 1, 2, 2), 2.5))


@pytest.mark.parametrize("k,stride,pad", [(2, 2, 0), (4, 2, 1), (3, 1, 1)])
def test_conv_transpose_shapes(k, stride, pad):
    out = conv_transpose2d(Tensor(np.zeros((1, 2, 6, 6))), Tensor(np.zeros((2, 5, k, k))), stride=stride, padding=pad)
    expected = 12 if stride == 2 else 6
    assert out.shape == (1, 5, expected, expected)


def test_conv_transpose_is_adjoint_of_conv():
    # <conv(x), y> == <x, conv_transpose(y)> with the same kernel
    rng = np.random.default_rng(4)
    x = rng.standard_normal((2, 3, 7, 7))
    w = rng.standard_normal((5, 3, 3, 3))
    y = rng.standard_normal((2, 5, 4, 4))
    lhs = (conv2d(Tensor(x), Tensor(w), padding=1, stride=2).data * y).sum()
    xt = conv_transpose2d(Tensor(y), Tensor(w), stride=2, padding=1).data
    assert xt.shape == x.shape
    rhs = (x * xt).sum()
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@pytest.mark.parametrize("k,stride,pad", [(2, 2, 0), (3, 1, 1), (4, 2, 1)])
def test_conv_transpose_gradcheck(k, stride, pad):
    rng = np.random.default_rng(5)
    x, w, b = _t(rng, 2, 3, 4, 4), _t(rng, 3, 2, k, k), _t(rng, 2)
    rep = grad_check(lambda: conv_transpose2d(x, w, b, stride=stride, padding=pad), [x, w, b], tolerance=1e-6)
    assert rep.passed, str(rep)


# -- maxpool -----------------------------------------------------------------

def test_maxpool_routes_gradient_to_argmax():
    x = Tensor(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]), requires_grad=True)
    out, idx = maxpool2d(x)
    assert out.data.item() == 4.0
    out.sum().backward()
    np.testing.assert_array_equal(x.grad[0, 0], [[0, 0], [0, 1]])
    assert idx.item() == 3


def test_maxpool_tie_goes_to_top_left():
    x = Tensor(np.full((1, 1, 2, 2), 5.0), requires_grad=True)
    out, _ = maxpool2d(x)
    out.sum().backward()
    assert out.data.item() == 5.0
    np.testing.assert_array_equal(x.grad[0, 0], [[1, 0], [0, 0]])


def test_maxpool_odd_dims_rejected():
    with pytest.raises(ShapeError):
        maxpool2d(Tensor(np.zeros((1, 1, 3, 4))))


def test_maxpool_gradcheck():
    rng = np.random.default_rng(6)
    x = _t(rng, 2, 4, 8, 8)
    rep = grad_check(lambda: maxpool2d(x)[0], [x], tolerance=1e-6)
    assert rep.passed, str(rep)


# -- pointwise and softmax ---------------------------------------------------

def test_pointwise_values():
    zero = Tensor(np.zeros(1))
    assert pointwise("tanh", zero).item() == 0.0
    assert pointwise("sigmoid", zero).item() == 0.5
    assert pointwise("relu", Tensor([-1.0, 2.0])).data.tolist() == [0.0, 2.0]
    with pytest.raises(ValueError):
        pointwise("gelu", zero)


@pytest.mark.parametrize("kind", ["tanh", "sigmoid", "relu"])
def test_pointwise_gradcheck(kind):
    rng = np.random.default_rng(7)
    x = _t(rng, 2, 4, 8, 8)
    rep = grad_check(lambda: pointwise(kind, x), [x], tolerance=1e-4)
    assert rep.passed, str(rep)


def test_softmax_spatial_uniform_and_dominant():
    out = softmax_spatial(Tensor(np.zeros((1, 1, 2, 2)))).data
    np.testing.assert_array_equal(out, 0.25)
    dom = np.zeros((1, 2, 2))
    dom[0, 1, 0] = 1e3
    out = softmax_spatial(Tensor(dom)).data
    assert out[0, 1, 0] == pytest.approx(1.0, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 4, 5), elements=st.floats(-50, 50)))
def test_softmax_spatial_is_distribution(x):
    out = softmax_spatial(Tensor(x)).data
    assert (out >= 0).all()
    np.testing.assert_allclose(out.sum(axis=(-2, -1)), 1.0, atol=1e-12)


def test_softmax_spatial_gradcheck():
    rng = np.random.default_rng(8)
    x = _t(rng, 2, 3, 4, 4)
    rep = grad_check(lambda: softmax_spatial(x), [x], tolerance=1e-4)
    assert rep.passed, str(rep)


# -- batchnorm -------------------------------------------------------------

def _bn_args(c):
    return Tensor(np.ones(c), requires_grad=True), Tensor(np.zeros(c), requires_grad=True), np.zeros(c), np.ones(c)


def test_batchnorm_constant_input_gives_beta():
    g = Tensor(np.full(3, 2.0))
    b = Tensor(np.array([0.1, -0.2, 0.3]))
    out = batchnorm_temporal(Tensor(np.full((2, 3, 3, 4, 4), 7.0)), g, b, np.zeros(3), np.ones(3), training=True)
    np.testing.assert_allclose(out.data, np.broadcast_to(b.data.reshape(1, 1, 3, 1, 1), out.shape), atol=1e-12)


def test_batchnorm_normalises_each_channel():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((2, 3, 4, 5, 5)) * 3 + 1
    g, b, rm, rv = _bn_args(4)
    out = batchnorm_temporal(Tensor(x), g, b, rm, rv, training=True).data
    np.testing.assert_allclose(out.mean(axis=(0, 1, 3, 4)), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=(0, 1, 3, 4)), 1.0, rtol=1e-4)
    np.testing.assert_allclose(rm, 0.1 * x.mean(axis=(0, 1, 3, 4)))


def test_batchnorm_eval_uses_running_stats():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((1, 2, 2, 3, 3))
    out = batchnorm_temporal(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), np.array([1.0, -1.0]), np.array([4.0, 1.0]), training=False)
    expected = (x - np.array([1.0, -1.0]).reshape(1, 1, 2, 1, 1)) / np.sqrt(np.array([4.0, 1.0]) + 1e-5).reshape(1, 1, 2, 1, 1)
    np.testing.assert_allclose(out.data, expected, rtol=1e-12)


@pytest.mark.parametrize("training", [True, False])
def test_batchnorm_gradcheck(training):
    rng = np.random.default_rng(11)
    x = _t(rng, 2, 3, 2, 4, 4)
    gamma = Tensor(rng.uniform(0.5, 1.5, 2), requires_grad=True)
    beta = _t(rng, 2)
    rm, rv = np.zeros(2), np.ones(2)
    rep = grad_check(lambda: batchnorm_temporal(x, gamma, beta, rm.copy(), rv.copy(), training), [x, gamma, beta], tolerance=1e-4)
    assert rep.passed, str(rep)


# -- Adam ---------------------------------------------------------------------

def test_adam_first_step_closed_form():
    p = Parameter(np.zeros(1), name="p")
    p.grad = np.ones(1)
    state = AdamState()
    adam_step([p], state)
    # m_hat = v_hat = 1 after bias correction
    assert p.data[0] == pytest.approx(-0.001 / (1.0 + 1e-8), rel=1e-15)
    assert state.step == 1


def test_adam_zero_grad_is_identity_but_counts():
    p = Parameter(np.array([0.3, -1.2]), name="p")
    before = p.data.copy()
    state = AdamState()
    for _ in range(5):
        p.grad = np.zeros(2)
        adam_step([p], state)
    np.testing.assert_array_equal(p.data, before)
    assert state.step == 5


def test_adam_frozen_parameter_untouched():
    p = Parameter(np.array([1.5]), name="frozen", frozen=True)
    p.grad = np.array([10.0])
    before = p.data.tobytes()
    opt = Adam([p])
    for _ in range(20):
        opt.step()
    assert p.data.tobytes() == before
    assert "frozen" not in opt.state.m


def test_adam_matches_reference_sequence():
    # independent scalar re-implementation of the update rule
    rng = np.random.default_rng(12)
    grads = rng.standard_normal(10)
    p = Parameter(np.array([0.5]), name="p")
    opt = Adam([p], lr=0.01)
    x, m, v = 0.5, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        p.grad = np.array([g])
        opt.step()
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        x -= 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
    assert p.data[0] == pytest.approx(x, rel=1e-12)


# -- gradcheck negative control and numerics -----------------------------------

def test_grad_check_catches_corrupted_backward():
    rng = np.random.default_rng(13)
    x = _t(rng, 3, 4)

    def bad_square():
        out = Tensor._result(x.data**2, (x,), lambda g: (g * 2.1 * x.data,), "bad_square")
        return out

    rep = grad_check(bad_square, [x], tolerance=1e-4)
    assert not rep.passed


def test_non_finite_values_raise():
    with pytest.raises(NumericError):
        Tensor([np.nan])
    with pytest.raises(NumericError):
        Tensor([1e308]) * Tensor([1e308])


def test_frozen_parameter_never_gets_grad():
    w = Parameter(np.ones(3), name="w", frozen=True)
    x = Tensor(np.arange(3.0), requires_grad=True)
    (w * x).sum().backward()
    assert w.grad is None
    np.testing.assert_array_equal(x.grad, 1.0)


# -- GTF ----------------------------------------------------------------------

def test_gtf_roundtrip_and_layout(tmp_path):
    arr = np.arange(24, dtype=np.float64).reshape(2, 3, 4) / 8
    path = tmp_path / "a.gtf"
    gtf.save(path, arr)
    blob = path.read_bytes()
    assert blob[:4] == b"GTF1" and blob[4] == 3
    assert blob[5:17] == np.array([2, 3, 4], dtype="<u4").tobytes()
    assert len(blob) == 17 + 24 * 4
    np.testing.assert_array_equal(gtf.load(path), arr)


def test_gtf_rejects_bad_magic():
    with pytest.raises(gtf.GTFError):
        gtf.decode(b"XXXX\x00" + b"\x00" * 4)
