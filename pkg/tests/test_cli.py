import threading

import pytest

from swarmselect.cli import main
from swarmselect.phylo.synth import write_synth_instance
from swarmselect.runtime import RunLedger


@pytest.fixture()
def instance_dir(tmp_path):
    write_synth_instance(tmp_path, stem="demo", n_genes=10, blur_genes=(6,))
    cfg = tmp_path / "demo.cfg"
    cfg.write_text(
        f"phylo.alignment = {tmp_path}/demo.fasta\n"
        f"phylo.partitions = {tmp_path}/demo.partitions\n"
        "phylo.bootstrap = 20\n"
        "phylo.seed = 7\n"
        "engine.I_max = 30\n"
        "engine.init_ones_fraction_range = 0.5,1.0\n"
        "engine.seed = 11\n"
        f"report.out_dir = {tmp_path}/out\n"
    )
    return tmp_path


class TestRunCommand:
    def test_run_writes_expected_outputs(self, instance_dir, capsys):
        rc = main([
            "run", "--config", str(instance_dir / "demo.cfg"),
            "--method", "bpso2", "--swarms", "2", "--reps", "2",
        ])
        assert rc == 0
        out = instance_dir / "out"
        assert (out / "summary.tsv").exists()
        ledgers = sorted(p.name for p in out.glob("ledger_*.tsv"))
        assert ledgers == [
            "ledger_s01_r01.tsv", "ledger_s01_r02.tsv",
            "ledger_s02_r01.tsv", "ledger_s02_r02.tsv",
        ]
        assert (out / "best_tree_s01.nwk").exists()
        assert (out / "best_tree_s02.nwk").exists()
        text = (out / "best_tree_s01.nwk").read_text()
        assert text.endswith(";\n")

    def test_config_error_exit_code_names_key(self, instance_dir, capsys):
        bad = instance_dir / "bad.cfg"
        bad.write_text("engine.nonsense = 1\n")
        assert main(["run", "--config", str(bad)]) == 2
        assert "engine.nonsense" in capsys.readouterr().err

    def test_unknown_set_key_exit_code(self, instance_dir):
        rc = main([
            "run", "--config", str(instance_dir / "demo.cfg"),
            "--set", "engine.flux_capacitor=1",
        ])
        assert rc == 2

    def test_missing_instance_exit_code(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text(
            "phylo.alignment = /nonexistent/a.fasta\n"
            "phylo.partitions = /nonexistent/a.partitions\n"
        )
        assert main(["run", "--config", str(cfg)]) == 3

    def test_ga_method_records_terminus(self, instance_dir):
        rc = main([
            "run", "--config", str(instance_dir / "demo.cfg"),
            "--method", "ga", "--out", str(instance_dir / "ga_out"),
        ])
        assert rc == 0
        summary = (instance_dir / "ga_out" / "summary.tsv").read_text().splitlines()
        headers = summary[1].split("\t")
        row = dict(zip(headers, summary[2].split("\t")))
        assert row["terminus"] == "1"  # systematic stage solves the fixture
        assert row["best_word"] == "1111110111"

    def test_seed_reproducibility(self, instance_dir):
        for sub in ("a", "b"):
            rc = main([
                "run", "--config", str(instance_dir / "demo.cfg"),
                "--seed", "123", "--out", str(instance_dir / sub),
            ])
            assert rc == 0
        a = (instance_dir / "a" / "ledger_s01_r01.tsv").read_text()
        b = (instance_dir / "b" / "ledger_s01_r01.tsv").read_text()
        assert a == b


class TestReportCommand:
    def test_tables_and_figures(self, instance_dir):
        out = instance_dir / "out"
        assert main([
            "run", "--config", str(instance_dir / "demo.cfg"),
            "--swarms", "2", "--reps", "1",
        ]) == 0
        assert main(["report", "--dir", str(out)]) == 0
        assert (out / "topology_table.tsv").exists()
        assert (out / "topology_table.txt").exists()
        assert (out / "best_per_swarm.tsv").exists()
        assert (out / "fitness_curve.png").exists()

        topo = (out / "topology_table.tsv").read_text().splitlines()
        assert topo[0] == "topology\tswarms\tb\tp\tfitness\toccurrences"
        assert len(topo) >= 3  # blur fixture produces at least 2 topologies

        # occurrence column sums to the number of ledger records with trees
        total = sum(int(line.split("\t")[-1]) for line in topo[1:])
        n_records = sum(
            len(RunLedger.read(p).records) for p in out.glob("ledger_*.tsv")
        )
        assert total == n_records

    def test_byte_identical_regeneration(self, instance_dir):
        out = instance_dir / "out"
        main(["run", "--config", str(instance_dir / "demo.cfg")])
        main(["report", "--dir", str(out), "--no-figures"])
        first = (out / "topology_table.tsv").read_bytes()
        first_swarm = (out / "best_per_swarm.tsv").read_bytes()
        main(["report", "--dir", str(out), "--no-figures"])
        assert (out / "topology_table.tsv").read_bytes() == first
        assert (out / "best_per_swarm.tsv").read_bytes() == first_swarm

    def test_method_comparison_with_extra_summary(self, instance_dir):
        out_a = instance_dir / "out_bpso"
        out_b = instance_dir / "out_ga"
        main(["run", "--config", str(instance_dir / "demo.cfg"),
              "--method", "bpso2", "--out", str(out_a)])
        main(["run", "--config", str(instance_dir / "demo.cfg"),
              "--method", "ga", "--out", str(out_b)])
        rc = main(["report", "--dir", str(out_a),
                   "--summary", str(out_b / "summary.tsv")])
        assert rc == 0
        table = (out_a / "method_comparison.tsv").read_text().splitlines()
        assert table[0].startswith("instance\t")
        assert "bpso2/10" in table[0] and "ga/30" in table[0]
        assert (out_a / "method_comparison.png").exists()

    def test_missing_summary_exit_code(self, tmp_path):
        assert main(["report", "--dir", str(tmp_path)]) == 3

    def test_summary_best_matches_ledgers(self, instance_dir):
        out = instance_dir / "out"
        main(["run", "--config", str(instance_dir / "demo.cfg"), "--swarms", "2"])
        from swarmselect.reports import load_summary
        summary = load_summary(out / "summary.tsv")
        for row in summary.rows:
            ledger = RunLedger.read(out / row["ledger"])
            assert float(row["fitness"]) == max(r.fitness for r in ledger.records)


class TestEvaluateCommand:
    def test_single_word(self, instance_dir, capsys):
        rc = main([
            "evaluate", "--config", str(instance_dir / "demo.cfg"),
            "--word", "1111110111",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "word=1111110111" in out
        assert "b=100.0" in out
        assert "fitness=95.0" in out

    def test_all_ones_shortcut_and_newick(self, instance_dir, capsys):
        rc = main([
            "evaluate", "--config", str(instance_dir / "demo.cfg"),
            "--word", "all-ones", "--newick",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "word=1111111111" in out
        assert out.strip().endswith(";")

    def test_word_length_mismatch(self, instance_dir, capsys):
        rc = main([
            "evaluate", "--config", str(instance_dir / "demo.cfg"),
            "--word", "101",
        ])
        assert rc == 3

    def test_cache_file_written(self, instance_dir, capsys):
        cache = instance_dir / "words.cache"
        rc = main([
            "evaluate", "--config", str(instance_dir / "demo.cfg"),
            "--set", f"runtime.cache={cache}",
            "--word", "1111110111",
        ])
        assert rc == 0
        assert cache.exists()
        line = cache.read_text().splitlines()[0]
        assert line.startswith("1111110111 ")


class TestServeWorkerCommand:
    def test_tcp_run_with_cli_workers(self, instance_dir):
        from swarmselect.runtime import TcpMasterTransport, master_loop
        from swarmselect.config import RunConfig

        cfg_path = str(instance_dir / "demo.cfg")
        transport = TcpMasterTransport(n_workers=3)
        workers = [
            threading.Thread(
                target=main,
                args=(["serve-worker", "--config", cfg_path,
                       "--host", "127.0.0.1", "--port", str(transport.port)],),
                daemon=True,
            )
            for _ in range(3)
        ]
        for w in workers:
            w.start()
        cfg = RunConfig.from_file(cfg_path)
        ledger = master_loop(cfg.engine_config(), 10, transport.start(),
                             run_id="cli", seed=[11, 1, 1])
        transport.stop()
        for w in workers:
            w.join(timeout=10)
        assert ledger.final_best[1].fitness >= 95.0
