"""Class-level bounds for polynomial latencies, with the witness behind each number."""

# %%
import math

from poa_lab.bounds import Metric, Mode, PolynomialClass, dual_certificate_check, gamma_bound, unweighted_closed_form
from poa_lab.latency import Polynomial

# %% Weighted players, linear latencies: the three solution concepts side by side.
for metric in ("poa", "crs", "crc"):
    res = gamma_bound(Mode.WEIGHTED, Metric.parse(metric), PolynomialClass(1))
    print(f"weighted {metric}: {res.value:.6f} at x = {res.x:.4f}, witness k = {res.witness.k:.4f}")

# %% The selfish-walk bound comes with a dual certificate: the inequality holds on
# a dense grid of (k, o) at the optimal x, and breaks once gamma is shaved by 1%.
res = gamma_bound(Mode.WEIGHTED, Metric.parse("crs"), PolynomialClass(1))
grid = [(k / 20, o, Polynomial.monomial(1)) for k in range(1, 400) for o in (0.25, 0.5, 1.0, 2.0)]
for scale in (1.0, 0.99):
    cert = dual_certificate_check(Mode.WEIGHTED, Metric.parse("crs"), res.x, scale * res.value, grid)
    print(f"gamma x {scale}: feasible = {cert.feasible}, worst relative slack {cert.min_slack:+.2e}")

# %% Unweighted players pay less: integrality of the loads limits the adversary.
for d in (1, 2, 3):
    value, w = unweighted_closed_form(Metric.parse("poa"), d)
    print(f"unweighted poa d={d}: {value:.4f} from {type(w).__name__}")

# %% Approximate equilibria degrade gracefully with epsilon.
for eps in (0.0, 0.1, 0.5, 1.0):
    v = gamma_bound(Mode.WEIGHTED, Metric.parse("poa", eps), PolynomialClass(2)).value
    print(f"weighted poa, d=2, eps={eps}: {v:.4f}")
print("golden ratio squared:", ((1 + math.sqrt(5)) / 2) ** 2)
