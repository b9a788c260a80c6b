"""The trapezoidal fundamental diagram and its three traffic phases.

Train frequency against train density follows the familiar road-traffic
trapezoid: a free-flow branch with slope v, a capacity plateau at f_max,
and a congestion branch falling at the backward wave speed w'.  The
script prints the aggregates, walks the density grid, and writes the
full diagram to phase_diagram.csv.
"""

import numpy as np

import metromax as mm
from metromax.analysis import (
    classify_phase,
    f_of_rho,
    g_of_rho,
    h_of_rho,
    phase_diagram,
    w_of_rho,
    write_phase_diagram_csv,
)

cfg = mm.LineConfig.from_json(mm.bundled_config("paris_line14"))
model = mm.segmentize(cfg)
p = mm.diagram_params(model)

print("free speed v      %7.2f km/h" % p.v_kmh)
print("wave speed w'     %7.2f km/h" % p.w_prime_kmh)
print("capacity f_max    %7.2f trains/h  (h_min = %.2f s)"
      % (p.f_max_per_hour, p.h_min))
print("jam density       %7.2f trains/km" % (p.rho_max * 1000))
print("phase boundaries  rho = %.3f and %.3f trains/km"
      % (p.f_max / p.v * 1000, (p.rho_max - p.f_max / p.w_prime) * 1000))

print("\n  m    rho(tr/km)      h(s)     f(tr/h)     w(s)     g(s)  phase")
for m in (4, 10, 16, 21, 35, 50, 62, 70, 76):
    rho = p.rho(m)
    print("%3d      %8.3f  %8.2f  %9.2f  %7.2f  %7.2f  %s"
          % (m, rho * 1000, h_of_rho(p, rho), f_of_rho(p, rho) * 3600,
             w_of_rho(p, rho), g_of_rho(p, rho), classify_phase(p, rho).value))

# the closed form behind the diagram is exact: check one point per phase
for m in (10, 30, 70):
    assert np.isclose(h_of_rho(p, p.rho(m)), mm.closed_form_headway(model, m))

points = phase_diagram(model)
write_phase_diagram_csv(points, "phase_diagram.csv")
print("\nwrote phase_diagram.csv with %d rows (one per train count)" % len(points))
