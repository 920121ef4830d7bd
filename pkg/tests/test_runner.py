import copy
import json

import pytest

from nrusim.errors import ConfigError
from nrusim.pcapio import read_pcap, write_pcap
from nrusim.runner import (
    compare_reports,
    extract_metric,
    parse_expectation,
    run_scenario,
    write_outputs,
)
from nrusim.scenario import scenario_from_dict
from tests.test_scenario import variant


class TestRunBasics:
    def test_minimal_run_produces_complete_report(self):
        result = run_scenario(scenario_from_dict(variant()))
        report = result.report
        assert report["schema"] == 1
        assert report["attach"][0]["ip"] == "12.1.1.2"
        assert report["pings"][0]["received"] == 5
        assert report["event_count"] == len(result.log)

    def test_every_report_number_recomputable_from_the_log(self):
        result = run_scenario(scenario_from_dict(variant()))
        samples = [r for r in result.log.records if r["action"] == "rtt_sample"]
        assert len(samples) == result.report["pings"][0]["received"]

    def test_throughput_totals_recomputable_from_the_log(self, bundled_results):
        result = bundled_results["test_a"]
        for row in result.report["throughput"]:
            logged = sum(r["size"] for r in result.log.records
                         if r["action"] == "bulk_rx" and r["direction"] == row["direction"])
            assert logged == row["delivered_bytes"]

    def test_unprovisioned_ue_reports_attach_failure(self):
        raw = variant(**{"nodes.1.imsi": "001010000000009"})
        raw["nodes"][1]["unprovisioned"] = True
        report = run_scenario(scenario_from_dict(raw)).report
        row = report["attach"][0]
        assert row["phase"] == "SYNCED"
        assert row["failure"] == "unknown-subscriber"
        assert report["pings"][0]["received"] == 0

    def test_gnb_off_air_leaves_ue_scanning(self):
        raw = variant(**{"nodes.0.on_air": False})
        report = run_scenario(scenario_from_dict(raw)).report
        row = report["attach"][0]
        assert row["phase"] == "SCANNING"
        assert row["failure"] == "no-cell-found"
        assert row["scan_steps"] == 538

    def test_ping_to_sessionless_pool_address_lost(self):
        raw = variant(**{"traffic.0.dst": "12.1.1.99"})
        report = run_scenario(scenario_from_dict(raw)).report
        assert report["pings"][0]["received"] == 0
        assert report["counters"]["upf_dropped_no_session"] == 5

    def test_foreign_occupancy_delays_but_does_not_break_pings(self):
        raw = variant()
        # A foreign burst train during the whole ping window.
        raw["occupancy"] = [
            {"start_us": i * 20_000, "end_us": i * 20_000 + 15_000, "power_dbm": -50.0}
            for i in range(60)
        ]
        busy = run_scenario(scenario_from_dict(raw)).report
        quiet = run_scenario(scenario_from_dict(variant())).report
        assert busy["pings"][0]["received"] == 5
        assert busy["pings"][0]["avg_ms"] > quiet["pings"][0]["avg_ms"]

    def test_forcing_the_overloaded_host_zeroes_throughput(self):
        raw = variant()
        raw["traffic"].append({"probe": "throughput", "label": "downlink", "ue": "ue1",
                               "direction": "DL", "duration_s": 3})
        viable = run_scenario(scenario_from_dict(copy.deepcopy(raw))).report
        raw["nodes"][0]["host"] = "nuc-i5-core"
        starved = run_scenario(scenario_from_dict(raw)).report
        assert viable["throughput"][0]["peak_mbps"] > 0
        assert starved["throughput"][0]["peak_mbps"] == 0.0
        assert starved["throughput"][0]["avg_high_mbps"] == 0.0
        assert starved["link"]["ue1"]["viable"] is False
        assert starved["pings"][0]["received"] == 5  # control traffic survives


class TestPathProperties:
    def test_east_west_inner_packet_byte_exact_across_two_legs(self, bundled_results):
        taps = bundled_results["east_west"].taps
        ue1_requests = [raw for _t, raw in taps["ue:ue1"] if raw[20] == 8]  # ICMP type 8
        ue2_requests = [raw for _t, raw in taps["ue:ue2"] if raw[20] == 8]
        assert ue1_requests and ue1_requests == ue2_requests

    def test_north_south_upf_is_one_to_one(self, bundled_results):
        from nrusim.userplane import decode_ip

        taps = bundled_results["north_south"].taps
        def request_seqs(tap):
            seqs = []
            for _t, raw in taps[tap]:
                pkt = decode_ip(raw)
                if pkt.protocol == "ICMP" and pkt.icmp_type == 8:
                    seqs.append(pkt.icmp_seq)
            return seqs

        ue_side = request_seqs("ue:ue1")
        external_side = request_seqs("n6")
        assert sorted(ue_side) == sorted(set(ue_side))  # no duplicates
        assert sorted(external_side) == sorted(ue_side)  # 1:1 through the UPF

    def test_passive_rtt_consistent_with_active_ping(self, bundled_results):
        result = bundled_results["north_south"]
        report = result.report
        samples = [r for r in result.log.records if r["action"] == "rtt_sample"]
        assert samples
        ue_sessions = report["passive"]["ue:ue1"]["sessions"]
        n6_sessions = report["passive"]["n6"]["sessions"]
        ping = report["pings"][0]
        # The UE tap sits at the measurement endpoints, so its latest RTT
        # is one of the ping samples; the core-side tap excludes the radio
        # path and must read lower than any end-to-end sample.
        assert ping["min_ms"] <= ue_sessions[0]["rtt_latest_ms"] <= ping["max_ms"]
        assert 0 < n6_sessions[0]["rtt_latest_ms"] < ping["min_ms"]


class TestSuiteTable:
    def test_four_performance_reports_render_four_rows(self, bundled_results):
        from nrusim.metrics import render_table

        reports = [bundled_results[n].report for n in ("test_a", "test_b", "test_c", "test_d")]
        table = render_table(reports)
        lines = table.splitlines()
        assert len(lines) == 2 + 4  # header + rule + one row per test
        assert lines[2].startswith("test_a")
        for report in reports:
            ping = report["pings"][0]
            assert ping["min_ms"] <= ping["avg_ms"] <= ping["max_ms"]
            assert ping["mdev_ms"] <= ping["max_ms"] - ping["min_ms"]


class TestOutputs:
    def test_write_outputs_and_pcap_round_trip(self, tmp_path):
        raw = variant()
        raw["taps"] = ["ue:ue1"]
        result = run_scenario(scenario_from_dict(raw))
        out = write_outputs(result, tmp_path / "run", pcap=True)
        report = json.loads((out / "report.json").read_text())
        assert report["scenario"] == "unit"
        assert (out / "events.jsonl").read_text().count("\n") == report["event_count"]
        frames = read_pcap(out / "tap_ue_ue1.pcap")
        assert len(frames) == len(result.taps["ue:ue1"])

    def test_pcap_writer_reader_identity(self, tmp_path):
        packets = [(1_000_000, b"\x45\x00hello"), (2_500_000, b"world")]
        path = tmp_path / "x.pcap"
        write_pcap(path, packets)
        assert read_pcap(path) == packets


class TestCompare:
    def _reports(self):
        raw = variant()
        raw["traffic"].append({"probe": "throughput", "label": "downlink", "ue": "ue1",
                               "direction": "DL", "duration_s": 3})
        a = run_scenario(scenario_from_dict(copy.deepcopy(raw))).report
        slower = copy.deepcopy(raw)
        slower["nodes"][1]["sdr"] = "b200"
        slower["name"] = "unit-b200"
        b = run_scenario(scenario_from_dict(slower)).report
        return a, b

    def test_identical_reports_compare_all_equal(self):
        a, _ = self._reports()
        result = compare_reports(a, a)
        assert result.rows and all(row["relation"] == "=" for row in result.rows)

    def test_declared_expectation_verdicts(self):
        a, b = self._reports()
        expectations = [parse_expectation("dl_peak_mbps:a>=b"),
                        parse_expectation("rtt_min_ms:a<=b")]
        result = compare_reports(a, b, expectations)
        assert [v["passed"] for v in result.verdicts] == [True, True]
        assert result.all_pass

    def test_failed_expectation_reported(self):
        a, b = self._reports()
        result = compare_reports(a, b, [parse_expectation("dl_peak_mbps:a<b")])
        assert not result.all_pass

    def test_incompatible_schema_rejected(self):
        a, _ = self._reports()
        other = dict(a, schema=99)
        with pytest.raises(ConfigError, match="schema"):
            compare_reports(a, other)

    def test_expectation_parser_rejects_nonsense(self):
        with pytest.raises(ConfigError):
            parse_expectation("dl_peak_mbps")
        with pytest.raises(ConfigError):
            parse_expectation("nope:a>b")
        with pytest.raises(ConfigError):
            parse_expectation("dl_peak_mbps:a~b")

    def test_extract_metric_paths(self):
        a, _ = self._reports()
        assert extract_metric(a, "rtt_min_ms") == a["pings"][0]["min_ms"]
        assert extract_metric(a, "dl_peak_mbps") == a["throughput"][0]["peak_mbps"]
        assert extract_metric({}, "rtt_min_ms") is None
