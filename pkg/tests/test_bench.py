import csv
import json
import math

from voicenode.bench import run_bench
from voicenode.metrics import nearest_rank


class TestBenchHarness:
    def test_single_cycle_structure(self, server):
        report = run_bench(server.base_url, 1, [("eng", "fra")], quiet=True)
        assert report["failures"] == 0
        assert report["stages"]["end_to_end"]["count"] == 1
        # at least the post tx and the translation tx committed on-ledger
        assert report["stages"]["ledger_commit"]["count"] >= 2
        assert report["stages"]["login_to_timeline"]["count"] == 1
        assert "post" in report["cost"]
        assert "translation" in report["cost"]

    def test_zero_posts_is_success(self, server):
        report = run_bench(server.base_url, 0, [("eng", "fra")], quiet=True)
        assert report["failures"] == 0
        assert "end_to_end" not in report["stages"]

    def test_dump_matches_report_percentiles(self, server, tmp_path):
        dump = tmp_path / "samples.csv"
        report = run_bench(server.base_url, 3, [("eng", "fra")],
                           dump_path=str(dump), quiet=True)

        by_stage: dict[str, list[float]] = {}
        with open(dump, newline="") as f:
            for row in csv.DictReader(f):
                by_stage.setdefault(row["stage"], []).append(float(row["duration_ms"]))

        for stage, stats in report["stages"].items():
            values = sorted(by_stage[stage])
            assert stats["count"] == len(values)
            assert stats["p50_ms"] == nearest_rank(values, 50)
            assert stats["p95_ms"] == nearest_rank(values, 95)
            assert math.isclose(stats["mean_ms"], sum(values) / len(values))

    def test_end_to_end_not_less_than_own_commits(self, node):
        """Each cycle's end_to_end covers at least its largest single commit."""
        from .conftest import make_wav

        svc = node.identities
        author = svc.register("bench_a", "password-a", "eng")
        viewer = svc.register("bench_v", "password-v", "fra")
        svc.follow(viewer.user_id, "bench_a")

        import time
        for i in range(5):
            start_count = len([
                t for t in node.metrics.raw_samples() if t.stage == "ledger_commit"
            ])
            t0 = time.perf_counter()
            post = node.posts.create_post(author, make_wav(f"cycle {i}"))
            node.posts.resolve_for_viewer(post.post_id, viewer)
            end_to_end_ms = (time.perf_counter() - t0) * 1000
            cycle_commits = [
                t.duration_ms
                for t in node.metrics.raw_samples()
                if t.stage == "ledger_commit"
            ][start_count:]
            assert cycle_commits, "cycle produced no ledger commits"
            assert end_to_end_ms >= max(cycle_commits)
