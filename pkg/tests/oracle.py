"""Independent reference integrator for the device ODE (test-only).

Plain forward Euler on dx/dt = f(v) * (1 - (2x - 1)^(2p)) with a step of
pulse_width / substeps, vectorised across many trains at once.
"""
import numpy as np


def euler_trains(x0, amplitude, pulse_width, count, v_tp=0.15, v_tn=-0.15,
                 alpha_p=100.0, alpha_n=100.0, p=1, substeps=10_000):
    x = np.array(x0, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    count = np.asarray(count)
    rate = np.where(amplitude > v_tp, alpha_p * (amplitude - v_tp),
                    np.where(amplitude < v_tn, alpha_n * (amplitude - v_tn), 0.0))
    h = np.asarray(pulse_width, dtype=float) / substeps
    for k in range(int(count.max())):
        on = k < count
        hk = np.where(on, h, 0.0) * rate
        for _ in range(substeps):
            x += hk * (1.0 - (2.0 * x - 1.0) ** (2 * p))
        np.clip(x, 0.0, 1.0, out=x)
    return x
