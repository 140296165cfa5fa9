"""Independent reference computations shared by several test modules."""
import numpy as np


def pontryagin_shooting(mu, r, omega, tau, horizon, y0, step=1e-3):
    """Single-edge optimality system solved by linear shooting with RK4.

    State ``y = (p, v)``, costate ``ψ``; ``ẏ = A y + B0 ξ`` with
    ``ξ = -(B0·ψ)/r`` and ``B0 = (-τ, 1)``; ``ψ̇ = -Q y - (0, ψ_p)`` with
    ``Q = F^T μ F``, ``F = [[1, τ], [0, 1]]``; ``ψ(Φ) = F^T ω F y(Φ)``.
    Returns the sample times and ``y`` of shape ``(n, 2)``.
    """
    f = np.array([[1.0, tau], [0.0, 1.0]])
    q, qt = mu * f.T @ f, omega * f.T @ f
    b0 = np.array([-tau, 1.0])
    a = np.zeros((4, 4))
    a[0, 1] = 1.0
    a[:2, 2:] = -np.outer(b0, b0) / r
    a[2:, :2] = -q
    a[3, 2] = -1.0
    span = horizon - tau
    n = int(round(span / step))

    def run(x0):
        xs = [x0]
        x = x0.copy()
        for _ in range(n):
            k1 = a @ x
            k2 = a @ (x + step / 2 * k1)
            k3 = a @ (x + step / 2 * k2)
            k4 = a @ (x + step * k3)
            x = x + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            xs.append(x)
        return np.array(xs)

    base = run(np.r_[y0, 0.0, 0.0])
    cols = [run(np.r_[0.0, 0.0, e]) for e in np.eye(2)]
    # terminal condition ψ(Φ) - QT y(Φ) = 0 is affine in the unknown ψ(0)
    resid = lambda traj: traj[-1, 2:] - qt @ traj[-1, :2]
    jac = np.column_stack([resid(c) for c in cols])
    psi0 = np.linalg.solve(jac, -resid(base))
    traj = base + psi0[0] * cols[0] + psi0[1] * cols[1]
    return np.arange(n + 1) * step, traj[:, :2]
