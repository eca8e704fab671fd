"""Online GAN training against its deterministic scaling limit.

Simulates the macroscopic state of SGD at a few dimensions and reports how far
each run strays from the ODE solution.  The gap should shrink like 1/sqrt(n).

Run: python3 demos/sgd_vs_ode.py [out_dir]
"""

import math
import sys
from pathlib import Path

import numpy as np

from subspace_lab.gan import GanConfig, simulate_macro
from subspace_lab.harness.plots import Series, emit_plot, trajectory_series
from subspace_lab.model import MacroState, make_rng
from subspace_lab.ode import OdeSystem, integrate

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

cov = np.array([math.sqrt(3), math.sqrt(5)])
eta, t_end = 2.0, 20.0
start = MacroState(0.1 * np.eye(2), 0.1 * np.eye(2), 0.01 * np.eye(2), np.eye(2), np.eye(2))
ode = integrate(start, OdeSystem(cov, cov, 0.2, 0.04, eta, eta), t_end, 0.01, record_every=10)

for n in (500, 2000, 8000):
    cfg = GanConfig(n, 2, 2, 2, tau=0.2, tau_tilde=0.04, gen_noise=eta, gen_cov_sqrt=np.sqrt(cov))
    runs = simulate_macro(start, np.sqrt(cov), eta, cfg, int(t_end * n), [make_rng((s, n)) for s in range(5)],
                          record_every=n // 10)
    devs = [max((a - b).norm() for a, b in zip(r.states, ode.states)) for r in runs]
    print(f"n={n:5d}: mean sup deviation {np.mean(devs):.4f}  (times sqrt(n): {np.mean(devs) * math.sqrt(n):.2f})")

series = trajectory_series(runs[0], prefix="sgd ") + trajectory_series(ode, dashed=True, prefix="ode ")
(out / "sgd_vs_ode.svg").write_text(emit_plot(series, title="n=8000 vs ODE", ylabel="overlap"))
print(f"plot written to {out / 'sgd_vs_ode.svg'}")
