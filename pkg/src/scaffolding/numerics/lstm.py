"""Masked LSTM over a padded batch of sequences, as a single taped primitive.

Gate blocks in the fused weight columns are ordered input, forget, output,
candidate.  A step whose mask is 0 copies the previous hidden and cell
state forward, so ``H[:, -1]`` is the state after the last real token of
each row.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor, _emit, _sigmoid, as_tensor


def lstm_sequence(x, mask, w_x, w_h, bias, h0=None) -> Tensor:
    """Run one LSTM layer.

    x: (B, L, d_in); mask: (B, L) of 0/1; w_x: (d_in, 4d); w_h: (d, 4d);
    bias: (4d,); h0: optional (B, d) initial hidden state (cell starts at 0).
    Returns the hidden states, shape (B, L, d).
    """
    x, w_x, w_h, bias = (as_tensor(t) for t in (x, w_x, w_h, bias))
    if x.ndim != 3:
        raise ShapeError(f"lstm_sequence expects (B, L, d_in), got {x.shape}")
    B, L, d_in = x.shape
    d = w_h.shape[0]
    if w_x.shape != (d_in, 4 * d) or w_h.shape != (d, 4 * d) or bias.shape != (4 * d,):
        raise ShapeError(
            f"lstm_sequence: input {d_in}, weights {w_x.shape}, {w_h.shape}, bias {bias.shape}"
        )
    m = np.asarray(mask, dtype=np.float64).reshape(B, L)
    if h0 is None:
        h0 = Tensor(np.zeros((B, d)))
    h0 = as_tensor(h0)
    if h0.shape != (B, d):
        raise ShapeError(f"lstm_sequence: initial hidden {h0.shape}, expected {(B, d)}")

    # input projections for all steps at once
    zx = x.data @ w_x.data + bias.data
    H = np.empty((B, L, d))
    gates = np.empty((L, B, 4 * d))
    C = np.empty((L + 1, B, d))
    Hprev = np.empty((L, B, d))
    C[0] = 0.0
    h = h0.data
    for t in range(L):
        z = zx[:, t] + h @ w_h.data
        act = np.empty_like(z)
        act[:, : 3 * d] = _sigmoid(z[:, : 3 * d])
        act[:, 3 * d :] = np.tanh(z[:, 3 * d :])
        i, f, o, g = (act[:, k * d : (k + 1) * d] for k in range(4))
        c_new = f * C[t] + i * g
        h_new = o * np.tanh(c_new)
        mt = m[:, t, None]
        gates[t] = act
        Hprev[t] = h
        C[t + 1] = mt * c_new + (1 - mt) * C[t]
        h = mt * h_new + (1 - mt) * h
        H[:, t] = h

    def grad_fn(gH):
        gx = np.zeros((B, L, d_in))
        gWx = np.zeros_like(w_x.data)
        gWh = np.zeros_like(w_h.data)
        gb = np.zeros_like(bias.data)
        dh_next = np.zeros((B, d))
        dc_next = np.zeros((B, d))
        for t in reversed(range(L)):
            mt = m[:, t, None]
            dh = gH[:, t] + dh_next
            act = gates[t]
            i, f, o, g = (act[:, k * d : (k + 1) * d] for k in range(4))
            c_prev = C[t]
            c_new = f * c_prev + i * g
            tc = np.tanh(c_new)
            dh_new = mt * dh
            dc_new = mt * dc_next + dh_new * o * (1 - tc * tc)
            dz = np.empty((B, 4 * d))
            dz[:, :d] = dc_new * g * i * (1 - i)
            dz[:, d : 2 * d] = dc_new * c_prev * f * (1 - f)
            dz[:, 2 * d : 3 * d] = dh_new * tc * o * (1 - o)
            dz[:, 3 * d :] = dc_new * i * (1 - g * g)
            gWx += x.data[:, t].T @ dz
            gWh += Hprev[t].T @ dz
            gb += dz.sum(axis=0)
            gx[:, t] = dz @ w_x.data.T
            dh_next = dz @ w_h.data.T + (1 - mt) * dh
            dc_next = dc_new * f + (1 - mt) * dc_next
        return gx, gWx, gWh, gb, dh_next

    return _emit(H, (x, w_x, w_h, bias, h0), grad_fn, "lstm_sequence")
