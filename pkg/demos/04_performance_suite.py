#!/usr/bin/env python3
"""The four-hardware-configuration performance suite, in one table.

Runs the bundled tests A-D (different SDR mixes, media, and host
capacities) and prints the result table: RTT statistics plus windowed
uplink/downlink throughput.  Test D's gNB host also runs the core and
drops 1.5% of its samples, which zeroes bulk throughput while the pings
keep answering.
"""

from nrusim.metrics import render_table
from nrusim.runner import compare_reports, parse_expectation, run_scenario
from nrusim.scenario import load_bundled

reports = {}
for name in ("test_a", "test_b", "test_c", "test_d"):
    reports[name] = run_scenario(load_bundled(name)).report
    link = reports[name]["link"]["ue1"]
    print(f"{name}: rsrp {reports[name]['rsrp_dbm']['ue1']} dBm, "
          f"sample drop {link['drop_fraction']:.3f}, viable {link['viable']}")

print()
print(render_table(list(reports.values())))

# The hardware orderings the suite is expected to show.
checks = [
    ("test_b", "test_a", "dl_peak_mbps:a>b", "N300 UE outruns the USB3-attached B210"),
    ("test_a", "test_c", "dl_peak_mbps:a>b", "attenuated cable costs most of the rate"),
    ("test_c", "test_a", "rtt_min_ms:a<=b", "cable shaves the over-air latency floor"),
    ("test_a", "test_b", "ul_peak_mbps:a==b", "uplink is bound by the shared gNB SDR"),
]
print()
for a, b, expectation, why in checks:
    result = compare_reports(reports[a], reports[b], [parse_expectation(expectation)])
    verdict = "PASS" if result.all_pass else "FAIL"
    print(f"{verdict} {a} vs {b}: {expectation}  ({why})")
