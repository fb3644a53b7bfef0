import numpy as np
import pytest

from zhmt import tensor as T
from zhmt.tensor import Tensor


def fd_check(build, params, eps=1e-6, tol=1e-6):
    """Central-difference check of d(build(params).sum)/d(param) for every
    entry of every parameter tensor."""
    tensors = [Tensor(p, requires_grad=True) for p in params]
    out = build(*tensors)
    loss = T.tsum(out)
    loss.backward()
    for t in tensors:
        grad = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = float(T.tsum(build(*tensors)).data)
            flat[j] = orig - eps
            dn = float(T.tsum(build(*tensors)).data)
            flat[j] = orig
            fd = (up - dn) / (2 * eps)
            assert abs(fd - grad.reshape(-1)[j]) < tol * max(1.0, abs(fd)), (
                f"mismatch at {j}: fd={fd} ad={grad.reshape(-1)[j]}"
            )


def test_add_mul_broadcast_grads():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4,))
    fd_check(lambda x, y: x * y + y, [a, b])


def test_matmul_grads():
    rng = np.random.default_rng(1)
    fd_check(lambda x, y: x @ y, [rng.normal(size=(3, 4)), rng.normal(size=(4, 2))])


def test_batched_matmul_grads():
    rng = np.random.default_rng(2)
    fd_check(lambda x, y: x @ y, [rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 2))])


def test_softmax_grads():
    rng = np.random.default_rng(3)
    fd_check(lambda x: T.softmax(x), [rng.normal(size=(3, 5))])


def test_layernorm_grads():
    rng = np.random.default_rng(4)
    fd_check(
        lambda x, g, b: T.layer_norm(x, g, b),
        [rng.normal(size=(2, 6)), rng.normal(size=(6,)), rng.normal(size=(6,))],
        tol=1e-5,
    )


def test_gelu_grads():
    rng = np.random.default_rng(5)
    fd_check(lambda x: T.gelu(x), [rng.normal(size=(4, 3))])


def test_cross_entropy_grads_and_value():
    rng = np.random.default_rng(6)
    logits = rng.normal(size=(4, 7))
    targets = np.array([0, 3, 6, 2])
    fd_check(lambda x: T.cross_entropy(x, targets), [logits])
    # value equals -log softmax[target]
    t = Tensor(logits)
    ce = T.cross_entropy(t, targets).data
    probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    assert np.allclose(ce, -np.log(probs[np.arange(4), targets]), atol=1e-12)


def test_gather_scatter_grads():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(5, 3))
    idx = np.array([0, 2, 2, 4])

    fd_check(lambda t: T.gather_rows(t, idx), [x])
    fd_check(lambda t: T.scatter_rows(T.gather_rows(t, np.array([1, 3])), np.array([0, 2]), 4), [x])
    fd_check(lambda t: T.gather_rc(t, np.array([0, 1, 4]), 2), [x])


def test_transpose_reshape_sum_grads():
    rng = np.random.default_rng(8)
    fd_check(lambda x: T.tsum(T.transpose(x, (1, 0, 2)), axis=1), [rng.normal(size=(2, 3, 4))])
    fd_check(lambda x: T.reshape(x, (6, 2)), [rng.normal(size=(3, 4))])
    fd_check(lambda x: T.tmean(x, axis=0, keepdims=True), [rng.normal(size=(3, 4))])


def test_div_grads():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(3, 1)) + 3.0
    fd_check(lambda x, y: x / y, [a, b])


def test_backward_requires_scalar():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ValueError):
        (t * 2.0).backward()


def test_no_grad_without_requires():
    a = Tensor(np.ones(3))
    b = Tensor(np.ones(3), requires_grad=True)
    out = T.tsum(a * b)
    out.backward()
    assert a.grad is None
    assert np.allclose(b.grad, 1.0)


def test_grad_accumulates_across_reuse():
    x = Tensor(np.array([2.0]), requires_grad=True)
    y = T.tsum(x * x)  # dy/dx = 2x = 4
    y.backward()
    assert np.allclose(x.grad, 4.0)


def test_assert_finite():
    with pytest.raises(FloatingPointError, match="bad"):
        T.assert_finite("bad", np.array([1.0, np.nan]))
