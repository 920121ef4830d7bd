#!/usr/bin/env python3
"""Band planning walkthrough: rasters, sync scan, and regulatory checks.

Everything a deployment needs to pick a legal 5 GHz channel: convert
raster indices to frequencies, enumerate where a UE would hunt for the
cell, and check the assignment against jurisdiction rules.
"""

from nrusim import spectrum

# --- Channel raster -------------------------------------------------------
# The unlicensed 5 GHz band (n46) spans 5150-5925 MHz with a 15 kHz raster.
band = spectrum.get_band("n46")
print("band n46 raster:",
      f"{band.dl_raster.first} - <{band.dl_raster.step}> - {band.dl_raster.last}")

for arfcn in (743333, 750000, 795000):
    print(f"  ARFCN {arfcn} -> {spectrum.arfcn_to_frequency(arfcn):.3f} MHz")

# The inverse rejects anything off the 15 kHz grid and suggests neighbours.
try:
    spectrum.frequency_to_arfcn(5250.007)
except spectrum.OffRasterError as err:
    print(f"  5250.007 MHz is off-grid: nearest indices {err.below} and {err.above}")

# --- Synchronization raster -------------------------------------------------
# A powering-on UE sweeps the band's GSCN entries in order until it hears
# an SS block.  n46 has 538 candidates.
candidates = spectrum.ss_scan_candidates(band)
print(f"\nSS scan candidates: {len(candidates)}")
print(f"  first {candidates[0]}, last {candidates[-1]}")

# --- Regulatory checks -------------------------------------------------------
# Two rules matter in the default jurisdiction: 5150-5250 MHz is indoor
# only, and 5725-5875 MHz is capped at 25 mW mean EIRP.
rules = spectrum.load_regulatory_rules("AU")

assignments = [
    ("20 mW indoor at 5200 MHz", spectrum.ChannelAssignment("n46", 746667, 20.0, 20.0, indoor=True)),
    ("20 mW outdoor at 5200 MHz", spectrum.ChannelAssignment("n46", 746667, 20.0, 20.0, indoor=False)),
    ("30 mW at 5800 MHz", spectrum.ChannelAssignment("n46", 786667, 20.0, 30.0, indoor=False)),
    ("25 mW at 5800 MHz", spectrum.ChannelAssignment("n46", 786667, 20.0, 25.0, indoor=False)),
]
print("\nregulatory results:")
for label, assignment in assignments:
    violations = spectrum.check_regulatory(assignment, rules)
    verdict = "compliant" if not violations else "; ".join(v.message for v in violations)
    print(f"  {label}: {verdict}")
