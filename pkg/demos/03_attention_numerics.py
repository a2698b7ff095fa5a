"""The spatial attention block: forward pass, mask, gradients, loss.

Four 1x1 projections squeeze each position's channels to one logit, a
softmax over positions turns logits into a mask, and the mask reweights the
feature map. Everything runs in float64 so the analytic gradients can be
checked against finite differences.
"""
import numpy as np

from dynimage.attention import attention_backward, attention_forward, bce_loss, init_params, layer_widths

rng = np.random.default_rng(0)
H, W, C = 4, 4, 8
A = rng.normal(size=(H, W, C))
params = init_params(C, seed=0)
print("layer widths:", layer_widths(C))

out = attention_forward(A, params)
print("mask sums to", out.mask.sum(), "| largest weight at", tuple(int(i) for i in np.unravel_index(out.mask.argmax(), out.mask.shape)))

# --- gradient check ----------------------------------------------------------------
# loss L = <G, output> for a random upstream gradient G
G = rng.normal(size=A.shape)
dA, dparams = attention_backward(A, params, G)

h = 1e-5
fd = np.zeros_like(A)
for idx in np.ndindex(A.shape):
    Ap, Am = A.copy(), A.copy()
    Ap[idx] += h
    Am[idx] -= h
    fd[idx] = ((attention_forward(Ap, params).output - attention_forward(Am, params).output) * G).sum() / (2 * h)
print("input gradient, relative error vs finite differences:",
      np.linalg.norm(dA - fd) / np.linalg.norm(fd))

# --- a constant map attends uniformly ---------------------------------------------------
flat = attention_forward(np.ones((3, 3, C)), params)
print("constant input -> mask", np.unique(np.round(flat.mask, 12)))

# --- binary cross-entropy ---------------------------------------------------------------
for p_ in (0.5, 0.9, 0.99, 1.0):
    print(f"bce(p={p_}, label=1) = {bce_loss(p_, 1):.6g}")   # p=1 is clamped, stays finite
