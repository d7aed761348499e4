import hashlib
import json
import random
import sys
import time
from pathlib import Path

import pytest

from labloop.errors import GuardConfigError, PatchError
from labloop.experiment import (
    CommitResult,
    ExecResult,
    Hunk,
    Patch,
    StructuredFailure,
    Workspace,
    apply_patch,
    codebase_digest,
    coding_loop,
    execute,
    log_silence,
    loss_stagnation,
    parse_runtime_signal,
    run_guard,
)
from labloop.gateway import Gateway, MockProvider, ProviderConfig

GUARD = f"{sys.executable} -m compileall -q ."


@pytest.fixture
def workspace(tmp_path):
    data = tmp_path / "dataset"
    data.mkdir()
    (data / "input.csv").write_text("a\n1\n")
    return Workspace.create(tmp_path / "run", data_source=data)


def scripted_gateway(replies):
    return Gateway(MockProvider(script=list(replies)), ProviderConfig(concurrency=1))


class TestApplyPatch:
    def test_empty_patch_recorded_and_unchanged(self, workspace):
        before = codebase_digest(workspace)
        seq = apply_patch(workspace, Patch(hunks=()))
        assert codebase_digest(workspace) == before
        assert (workspace.patches_dir / f"{seq:04d}.json").exists()

    def test_create_then_replace(self, workspace):
        apply_patch(workspace, Patch(hunks=(
            Hunk("src/main.py", "create", "line one\nline two\nline three\n"),
        )))
        apply_patch(workspace, Patch(hunks=(
            Hunk("src/main.py", "replace-range", "LINE TWO", 2, 2),
        )))
        text = (workspace.code_dir / "src/main.py").read_text()
        assert text == "line one\nLINE TWO\nline three\n"

    def test_path_escape_rejected(self, workspace):
        with pytest.raises(PatchError, match="escapes|absolute"):
            apply_patch(workspace, Patch(hunks=(
                Hunk("../../etc/passwd", "create", "owned"),
            )))

    def test_absolute_path_rejected(self, workspace):
        with pytest.raises(PatchError):
            apply_patch(workspace, Patch(hunks=(Hunk("/etc/hosts", "create", "x"),)))

    def test_atomicity_on_conflicting_hunk(self, workspace):
        apply_patch(workspace, Patch(hunks=(Hunk("a.py", "create", "x = 1\n"),)))
        before = codebase_digest(workspace)
        patch = Patch(hunks=(
            Hunk("a.py", "replace-range", "x = 2", 1, 1),
            Hunk("missing.py", "delete"),          # conflicts; whole patch must roll back
        ))
        with pytest.raises(PatchError):
            apply_patch(workspace, patch)
        assert codebase_digest(workspace) == before

    def test_out_of_range_replace_rejected_with_context(self, workspace):
        apply_patch(workspace, Patch(hunks=(Hunk("a.py", "create", "x = 1\n"),)))
        with pytest.raises(PatchError, match="out of bounds"):
            apply_patch(workspace, Patch(hunks=(
                Hunk("a.py", "replace-range", "y", 5, 9),
            )))

    def test_create_conflict_rejected(self, workspace):
        apply_patch(workspace, Patch(hunks=(Hunk("a.py", "create", "x = 1\n"),)))
        with pytest.raises(PatchError, match="create conflict"):
            apply_patch(workspace, Patch(hunks=(Hunk("a.py", "create", "x = 2\n"),)))

    def test_delete(self, workspace):
        apply_patch(workspace, Patch(hunks=(Hunk("a.py", "create", "x\n"),)))
        apply_patch(workspace, Patch(hunks=(Hunk("a.py", "delete"),)))
        assert not (workspace.code_dir / "a.py").exists()

    def test_patch_sequence_numbers(self, workspace):
        for i in range(3):
            apply_patch(workspace, Patch(hunks=(Hunk(f"f{i}.py", "create", "pass\n"),)))
        names = sorted(p.name for p in workspace.patches_dir.glob("*.json"))
        assert names == ["0001.json", "0002.json", "0003.json"]

    def test_from_json_with_fences(self):
        text = '```json\n{"hunks": [{"path": "m.py", "op": "create", "content": "x"}]}\n```'
        patch = Patch.from_json(text)
        assert patch.hunks[0].path == "m.py"

    def test_from_json_bad_op(self):
        with pytest.raises(PatchError, match="unknown patch op"):
            Patch.from_json('{"hunks": [{"path": "m.py", "op": "truncate"}]}')


class TestConfinement:
    def fuzz_paths(self, rng):
        pieces = ["..", "src", "a.py", ".", "/etc", "~", "data", "log",
                  "..\\windows", "c:/x", "//server/share", "\x00weird"]
        return "/".join(rng.choice(pieces) for _ in range(rng.randint(1, 4)))

    def outside_digests(self, workspace):
        digests = {}
        for path in sorted(workspace.root.parent.rglob("*")):
            if path.is_file() and not (
                    path.is_relative_to(workspace.code_dir)
                    or path.is_relative_to(workspace.log_dir)):
                digests[str(path)] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    def test_adversarial_patches_stay_inside(self, workspace):
        rng = random.Random(17)
        before = self.outside_digests(workspace)
        applied = 0
        for _ in range(200):
            op = rng.choice(["create", "replace-range", "delete"])
            hunk = Hunk(self.fuzz_paths(rng), op, "payload", 1, 1)
            try:
                apply_patch(workspace, Patch(hunks=(hunk,)))
                applied += 1
            except PatchError:
                pass
        assert self.outside_digests(workspace) == before


class TestRunGuard:
    def test_clean_codebase_passes(self, workspace):
        (workspace.code_dir / "ok.py").write_text("x = 1\n")
        result = run_guard(workspace, GUARD)
        assert result.verdict == 1

    def test_planted_syntax_error_fails_with_diagnostics(self, workspace):
        (workspace.code_dir / "bad.py").write_text("def broken(:\n")
        result = run_guard(workspace, GUARD)
        assert result.verdict == 0
        assert len(result.diagnostics) >= 1
        assert all(d.severity == "error" for d in result.diagnostics)

    def test_verdict_one_has_no_error_diagnostics(self, workspace):
        (workspace.code_dir / "ok.py").write_text("x = 1\n")
        result = run_guard(workspace, GUARD)
        assert not [d for d in result.diagnostics if d.severity == "error"]

    def test_missing_guard_binary_is_config_error(self, workspace):
        with pytest.raises(GuardConfigError):
            run_guard(workspace, "definitely-not-a-real-binary-xyz --check")

    def test_empty_command_is_config_error(self, workspace):
        with pytest.raises(GuardConfigError):
            run_guard(workspace, "")


class TestCodingLoop:
    def test_clean_base_commits_with_zero_patches(self, workspace):
        (workspace.code_dir / "main.py").write_text("print('hi')\n")
        gateway = scripted_gateway([])
        result = coding_loop(workspace, gateway, GUARD, k_max=5)
        assert isinstance(result, CommitResult)
        assert result.reflections == 0
        assert list(workspace.patches_dir.glob("*.json")) == []

    def test_fixing_mock_commits_at_one_reflection(self, workspace):
        (workspace.code_dir / "main.py").write_text("def broken(:\n")
        fix = json.dumps({"hunks": [{
            "path": "main.py", "op": "replace-range",
            "start_line": 1, "end_line": 1,
            "content": "def fixed():\n    return 1",
        }]})
        gateway = scripted_gateway([fix])
        result = coding_loop(workspace, gateway, GUARD, k_max=5)
        assert isinstance(result, CommitResult)
        assert result.reflections == 1

    def test_never_fixing_mock_fails_after_exactly_k_max(self, workspace):
        (workspace.code_dir / "main.py").write_text("def broken(:\n")
        noop = json.dumps({"hunks": []})
        provider = MockProvider(script=[noop] * 5)
        gateway = Gateway(provider, ProviderConfig(concurrency=1))
        result = coding_loop(workspace, gateway, GUARD, k_max=5)
        assert isinstance(result, StructuredFailure)
        assert result.phase == "coding"
        assert result.reason == "guard-budget-exhausted"
        assert result.budget["reflections"] == 5
        assert len(provider.calls) == 5  # exactly K_max reflections, no more

    def test_unapplicable_patch_consumes_iteration(self, workspace):
        (workspace.code_dir / "main.py").write_text("def broken(:\n")
        bad_patch = json.dumps({"hunks": [{"path": "../../escape.py",
                                           "op": "create", "content": "x"}]})
        fix = json.dumps({"hunks": [{
            "path": "main.py", "op": "replace-range",
            "start_line": 1, "end_line": 1, "content": "x = 1",
        }]})
        gateway = scripted_gateway([bad_patch, fix])
        result = coding_loop(workspace, gateway, GUARD, k_max=5)
        assert isinstance(result, CommitResult)
        assert result.reflections == 2


class TestParseRuntimeSignal:
    def test_epoch_counter_and_loss(self):
        signal = parse_runtime_signal(["starting", "epoch 3/10 loss: 0.42"])
        assert signal.loss == 0.42
        assert signal.progress == pytest.approx(0.3)

    def test_no_markers_falls_back_to_elapsed(self):
        signal = parse_runtime_signal(["warming up"], elapsed=30.0, limit=120.0)
        assert signal.loss is None
        assert signal.progress == pytest.approx(0.25)

    def test_malformed_loss_tolerated(self):
        signal = parse_runtime_signal(["loss: abc"], elapsed=None, limit=None)
        assert signal.loss is None

    def test_latest_loss_wins(self):
        signal = parse_runtime_signal(["loss: 0.9", "loss: 0.5", "loss = 0.3"])
        assert signal.loss == 0.3

    def test_progress_clamped(self):
        signal = parse_runtime_signal(["step 15/10"])
        assert signal.progress == 1.0

    def test_scientific_notation_loss(self):
        signal = parse_runtime_signal(["loss: 1.5e-3"])
        assert signal.loss == pytest.approx(0.0015)


def write_entry(workspace, body):
    (workspace.code_dir / "entry.py").write_text(body)
    return f"{sys.executable} entry.py"


class TestExecute:
    def test_clean_run_collects_loss_and_artifacts(self, workspace):
        entry = write_entry(workspace, (
            "print('epoch 1/2 loss: 0.9')\n"
            "print('epoch 2/2 loss: 0.5')\n"
            "open('metrics.json', 'w').write('{}')\n"
        ))
        result = execute(workspace, entry, sample_period=5.0, wall_limit=30.0)
        assert isinstance(result, ExecResult)
        assert result.exit_status == 0
        assert result.final_signal.loss == 0.5
        assert "metrics.json" in result.artifacts

    def test_nonzero_exit_is_still_a_result(self, workspace):
        entry = write_entry(workspace, "import sys; sys.exit(3)\n")
        result = execute(workspace, entry, sample_period=5.0, wall_limit=30.0)
        assert isinstance(result, ExecResult)
        assert result.exit_status == 3

    def test_infinite_loop_hits_wall_clock(self, workspace):
        entry = write_entry(workspace, "while True:\n    pass\n")
        start = time.monotonic()
        result = execute(workspace, entry, sample_period=0.5, wall_limit=2.0,
                         predicates=[])
        elapsed = time.monotonic() - start
        assert isinstance(result, StructuredFailure)
        assert result.reason == "wall-clock"
        assert elapsed < 2.0 + 0.5 + 1.0  # wall limit + one period + teardown slack

    def test_stagnation_predicate_fires(self, workspace):
        entry = write_entry(workspace, (
            "import time\n"
            "while True:\n"
            "    print('loss: 0.5', flush=True)\n"
            "    time.sleep(0.05)\n"
        ))
        result = execute(workspace, entry, sample_period=0.15, wall_limit=30.0,
                         predicates=[loss_stagnation(3)])
        assert isinstance(result, StructuredFailure)
        assert result.reason == "stagnation"
        assert result.signal is not None and result.signal.loss == 0.5

    def test_log_silence_predicate_fires(self, workspace):
        entry = write_entry(workspace, (
            "import time\n"
            "print('hello', flush=True)\n"
            "time.sleep(60)\n"
        ))
        result = execute(workspace, entry, sample_period=0.15, wall_limit=30.0,
                         predicates=[log_silence(3)])
        assert isinstance(result, StructuredFailure)
        assert result.reason == "log-silence"

    def test_launch_failure_immediate(self, workspace):
        result = execute(workspace, "no-such-binary-anywhere", sample_period=1.0,
                         wall_limit=5.0)
        assert isinstance(result, StructuredFailure)
        assert result.reason == "launch-failure"

    def test_sample_timestamps_strictly_increase(self, workspace):
        entry = write_entry(workspace, (
            "import time\n"
            "for i in range(20):\n"
            "    print(f'step {i}/20 loss: {1.0 - i * 0.04}', flush=True)\n"
            "    time.sleep(0.05)\n"
        ))
        samples = []
        original = parse_runtime_signal

        result = execute(workspace, entry, sample_period=0.12, wall_limit=30.0,
                         predicates=[])
        assert isinstance(result, ExecResult)
        events = [json.loads(line) for line in
                  (workspace.log_dir / "events.jsonl").read_text().splitlines()]
        signal_events = [e for e in events if e["kind"] == "signal"]
        stamps = [e["at"] for e in signal_events]
        assert stamps == sorted(stamps)

    def test_data_dir_never_mutated(self, workspace):
        data_file = Path(workspace.data_dir) / "input.csv"
        before = data_file.read_bytes()
        entry = write_entry(workspace, "print('loss: 0.1')\n")
        execute(workspace, entry, sample_period=5.0, wall_limit=10.0)
        assert data_file.read_bytes() == before
