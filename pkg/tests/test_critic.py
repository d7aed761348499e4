import itertools

import pytest

from labloop.critic import (
    ApprovalResult,
    CycleState,
    Feedback,
    approve,
    critique,
    headless_approve,
    revision_cycle,
    stages_to_run,
)
from labloop.critic.feedback import AxisFeedback
from labloop.errors import AwaitingApproval
from labloop.gateway import Gateway, MockProvider, ProviderConfig


def gw(script):
    return Gateway(MockProvider(script=list(script)), ProviderConfig(concurrency=1))


def feedback(verdict="REVISE", instructions=("", "", "")):
    return Feedback(verdict, tuple(
        AxisFeedback(axis, 0.4 if verdict == "REVISE" else 0.9, text)
        for axis, text in zip(("accuracy", "completeness", "neutrality"), instructions)))


class TestCritique:
    def test_high_confidence_passes(self):
        gateway = gw(["confidence: 0.9\npatch: none"] * 3)
        result = critique("summary", gateway, threshold=0.5)
        assert result.verdict == "PASS"
        assert [a.confidence for a in result.axes] == [0.9, 0.9, 0.9]

    def test_one_low_axis_forces_revise(self):
        gateway = gw([
            "confidence: 0.9\npatch: none",
            "confidence: 0.1\npatch: add the missing ablation to the experiment",
            "confidence: 0.9\npatch: none",
        ])
        result = critique("summary", gateway, threshold=0.5)
        assert result.verdict == "REVISE"
        assert "ablation" in result.axis("completeness").instruction

    def test_out_of_range_confidence_clamped(self):
        gateway = gw(["confidence: 1.3\npatch: none"] * 3)
        result = critique("summary", gateway)
        assert all(a.confidence == 1.0 for a in result.axes)

    def test_unparsable_axis_degrades_to_zero(self):
        gateway = gw(["total nonsense", "still nonsense",
                      "confidence: 0.8\npatch: none",
                      "confidence: 0.8\npatch: none"])
        result = critique("summary", gateway, retries=1)
        assert result.axis("accuracy").confidence == 0.0
        assert result.verdict == "REVISE"

    def test_exactly_three_axes_in_order(self):
        gateway = gw(["confidence: 0.7\npatch: none"] * 3)
        result = critique("summary", gateway)
        assert [a.axis for a in result.axes] == ["accuracy", "completeness", "neutrality"]

    def test_roundtrip(self):
        gateway = gw(["confidence: 0.7\npatch: tighten wording"] * 3)
        result = critique("summary", gateway)
        assert Feedback.from_dict(result.to_dict()) == result


class TestApprove:
    def test_headless_concurrence(self):
        gateway = gw(["verdict: PASS\nreason: evidence checks out"])
        result = headless_approve(feedback("PASS"), "ws evidence", gateway)
        assert result.verdict == "PASS"
        assert not result.flipped

    def test_headless_flip_recorded(self):
        gateway = gw(["verdict: REVISE\nreason: claimed metric absent from logs"])
        result = headless_approve(feedback("PASS"), "ws evidence", gateway)
        assert result.verdict == "REVISE"
        assert result.flipped
        assert result.provisional == "PASS"
        assert "absent" in result.note

    def test_headless_unparsable_keeps_provisional(self):
        gateway = gw(["mumble"])
        result = headless_approve(feedback("REVISE"), "ws", gateway)
        assert result.verdict == "REVISE"
        assert not result.flipped

    def test_interactive_verdict_committed_with_reviewer(self):
        committed = {"verdict": "REVISE", "reviewer": "ada", "note": "needs baselines"}
        result = approve(feedback("PASS"), "ws", "interactive",
                         verdict_source=lambda: committed)
        assert result.verdict == "REVISE"
        assert result.mode == "interactive"
        assert result.reviewer == "ada"
        assert result.flipped

    def test_interactive_without_verdict_parks_the_run(self):
        with pytest.raises(AwaitingApproval):
            approve(feedback("PASS"), "ws", "interactive",
                    verdict_source=lambda: None, wait_seconds=0.0)

    def test_interactive_timeout_with_headless_fallback(self):
        gateway = gw(["verdict: PASS\nreason: ok"])
        result = approve(feedback("PASS"), "ws", "interactive", gateway=gateway,
                         verdict_source=lambda: None, wait_seconds=0.0,
                         fallback_headless=True)
        assert result.mode == "headless"
        assert result.verdict == "PASS"


class TestStageSelection:
    def test_no_stage_named_reruns_everything(self):
        assert stages_to_run(feedback("REVISE")) == ["ideation", "data", "experiment"]

    def test_experiment_only(self):
        fb = feedback("REVISE", ("", "", "fix the experiment codebase"))
        assert stages_to_run(fb) == ["experiment"]

    def test_earliest_named_stage_wins(self):
        fb = feedback("REVISE", ("rework the idea", "", "fix the code"))
        assert stages_to_run(fb) == ["ideation", "data", "experiment"]

    def test_data_stage_reruns_downstream(self):
        fb = feedback("REVISE", ("", "the report is missing quality entries", ""))
        assert stages_to_run(fb) == ["data", "experiment"]

    def test_first_iteration_runs_all(self):
        assert stages_to_run(None) == ["ideation", "data", "experiment"]


def make_executors(trace):
    def executor(stage):
        def run(artifacts, fb):
            trace.append((stage, fb))
            return f"{stage}-artifact-{len(trace)}"
        return run
    return {stage: executor(stage) for stage in ("ideation", "data", "experiment")}


def scripted_approvals(verdicts):
    sequence = list(verdicts)

    def approve_fn(artifacts, fb):
        verdict = sequence.pop(0)
        return ApprovalResult(verdict, "headless", fb.verdict,
                              flipped=verdict != fb.verdict)
    return approve_fn


def constant_critique(verdict="REVISE", instructions=("", "", "")):
    def critique_fn(artifacts):
        return feedback(verdict, instructions)
    return critique_fn


class TestRevisionCycle:
    def test_immediate_pass_single_iteration(self):
        trace = []
        result = revision_cycle(make_executors(trace), constant_critique("PASS"),
                                scripted_approvals(["PASS"]), n_max=2)
        assert result.status == "passed"
        assert len(result.records) == 1
        assert len(trace) == 3  # each stage ran once

    def test_always_revise_runs_n_max_plus_one_iterations(self):
        trace = []
        result = revision_cycle(make_executors(trace), constant_critique("REVISE"),
                                scripted_approvals(["REVISE"] * 3), n_max=2)
        assert result.status == "failed"
        assert len(result.records) == 3          # initial + 2 retries
        assert len(trace) == 9                   # no stage named -> all re-run

    def test_feedback_injected_into_next_iteration(self):
        trace = []
        result = revision_cycle(make_executors(trace),
                                constant_critique("REVISE", ("check accuracy", "", "")),
                                scripted_approvals(["REVISE", "PASS"]), n_max=2)
        assert result.status == "passed"
        first_iteration = trace[:3]
        second_iteration = trace[3:]
        assert all(fb is None for _, fb in first_iteration)
        assert all(fb is not None for _, fb in second_iteration)
        assert second_iteration[0][1].axis("accuracy").instruction == "check accuracy"

    def test_locality_reuses_upstream_artifacts(self):
        trace = []
        critique_fn = constant_critique("REVISE", ("", "", "fix the experiment code"))
        result = revision_cycle(make_executors(trace), critique_fn,
                                scripted_approvals(["REVISE", "PASS"]), n_max=2)
        assert result.status == "passed"
        stages_second = [stage for stage, _ in trace[3:]]
        assert stages_second == ["experiment"]
        # iteration 0's recorded artifacts unchanged by iteration 1
        assert result.records[0].artifacts["ideation"] == result.records[1].artifacts["ideation"]
        assert result.records[0].artifacts["experiment"] != result.records[1].artifacts["experiment"]

    def test_exhaustive_verdict_sequences_terminate(self):
        for length in (1, 2, 3):
            for sequence in itertools.product(["PASS", "REVISE"], repeat=length):
                # pad with REVISE so the cycle can always pop a verdict
                verdicts = list(sequence) + ["REVISE"] * 4
                trace = []
                result = revision_cycle(make_executors(trace),
                                        constant_critique("REVISE"),
                                        scripted_approvals(verdicts), n_max=2)
                assert len(result.records) <= 3
                if "PASS" in sequence[:3]:
                    first_pass = sequence.index("PASS")
                    if first_pass <= 2:
                        assert result.status == "passed"
                        assert len(result.records) == first_pass + 1

    def test_awaiting_approval_state_resumable(self):
        trace = []
        state = CycleState()

        def parked_approve(artifacts, fb):
            raise AwaitingApproval("park")

        with pytest.raises(AwaitingApproval):
            revision_cycle(make_executors(trace), constant_critique("PASS"),
                           parked_approve, n_max=2, state=state)
        assert state.feedback is not None
        assert len(state.completed_stages) == 3

        # resume from the serialized snapshot with a verdict now available
        restored = CycleState.from_dict(state.to_dict())
        resumed_trace = []
        result = revision_cycle(make_executors(resumed_trace), constant_critique("PASS"),
                                scripted_approvals(["PASS"]), n_max=2, state=restored)
        assert result.status == "passed"
        assert resumed_trace == []  # no stage re-ran on resume

    def test_trace_completeness(self):
        trace = []
        result = revision_cycle(make_executors(trace), constant_critique("PASS"),
                                scripted_approvals(["PASS"]), n_max=2)
        record = result.records[0]
        assert record.feedback is not None
        assert record.approval.mode == "headless"
        assert record.stages_run == ["ideation", "data", "experiment"]
