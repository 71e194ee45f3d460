"""The full mass estimate for a flattened boundary sphere.

Builds the flow, the asphericity mass and an asymptotically flat extension
with scalar curvature ``0.05 t^-4``, then shows how the ADM mass of the
extension compares with ``m_aS + m_H + e``.

Run with ``python3 demos/mass_budget.py``; takes a few seconds.
"""

from spheremass import (
    AxisymMetric,
    PrescribedScalar,
    asphericity_limit,
    hawking_mass_initial,
    normalize_area,
    run_flow,
    solve_lapse,
    verify_mass_bound,
)

H = 1.8
Rbar = PrescribedScalar.rotsym_power(0.05, 4)

trace = run_flow(normalize_area(AxisymMetric.ellipsoid(128, (1, 1, 0.8))), 20.0)
asph = asphericity_limit(trace)
m_H = hawking_mass_initial(trace.metric_at(1.0), H)
sol = solve_lapse(trace, Rbar, H, T=200.0)
report = verify_mass_bound(sol, asph, trace, Rbar, m_H)

print("boundary: spheroid (1, 1, 0.8) with constant mean curvature", H)
print(f"  Hawking mass of the boundary   m_H  = {report.m_H_sigma:.8f}")
print(f"  asphericity mass               m_aS = {report.m_aS:.8f}  (tail bound {report.m_aS_tail:.1e})")
print(f"  scalar curvature contribution  e    = {report.e_term:.8f}")
print(f"  bound m_aS + m_H + e                = {report.m_aS + report.m_H_sigma + report.e_term:.8f}")
print(f"  ADM mass of the extension           = {report.adm_estimate:.8f}  (tail bound {report.adm_tail:.1e})")
print(f"  slack                               = {report.inequality_slack:.3e}")
print(f"  finite-radius bound holds at every leaf: {report.per_time_ok}")

# the leaf Hawking masses increase towards the ADM mass
for t in (1, 2, 5, 20, 200):
    i = abs(sol.times - t).argmin()
    print(f"  m_H(t = {sol.times[i]:7.2f}) = {sol.leaf_hawking[i]:.8f}")
