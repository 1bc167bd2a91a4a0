# %% [markdown]
# # Link budget for a LAGEOS pass
#
# How many photons survive the trip up to a retroreflector satellite and back?
# The radar form and the step-by-step intercept chain are evaluated side by side.

# %%
import numpy as np

from qlink import scenario
from qlink.constants import ARCSEC
from qlink.link_budget import footprint_diameter, photons_per_pulse, radar_equation

sc = scenario.preset("lageos-mlro")
tx, tgt, chain = sc.transmitter(), sc.target(), sc.optical_chain()
R = sc["link"]["range_m"]

print(f"photons per pulse   {photons_per_pulse(tx):.3e}")
print(f"uplink spot at R    {footprint_diameter(tx.divergence, R):.1f} m")
print(f"return spot at R    {footprint_diameter(tgt.return_divergence, R):.1f} m")

# %% [markdown]
# The intercept chain with the quoted 100 m return spot, then the same chain
# with an extra two decades of beam spreading.

# %%
up, down = sc.quoted_spots()
for spreading in (1.0, 1e-2):
    res = radar_equation(tx, tgt, chain, R, sc.aperture_area(), spreading,
                         uplink_spot=up, downlink_spot=down)
    print(f"spreading {spreading:g}: step chain {res.step_chain:.3e}, "
          f"radar end-to-end {res.end_to_end:.3e}, N_pe {res.photoelectrons:.3e}")

for name, value in res.factor_log:
    print(f"  {name:<24s} {value:.4g}")

# %% [markdown]
# The radar form is half the top-hat chain: a Gaussian beam puts twice the
# mean irradiance on axis but the chain above assumes a uniform disc.

# %%
ranges = R * 2.0 ** np.arange(4)
n = [radar_equation(tx, tgt, chain, r, sc.aperture_area()).photoelectrons for r in ranges]
for r, v in zip(ranges, n):
    print(f"R = {r / 1e6:5.1f} Mm   N_pe = {v:.4e}   ratio to first {v / n[0]:.6f}")

# %% divergence scan over the station's tunable range
for arcsec in (1, 2, 5, 10, 20):
    tx_d = type(tx)(tx.pulse_energy, tx.wavelength, arcsec * ARCSEC, tx.rep_rate)
    print(f"{arcsec:3d}\"  N_pe {radar_equation(tx_d, tgt, chain, R, sc.aperture_area()).photoelectrons:.3e}")
