"""Tests for run telemetry: spans, setup and decorators."""

from unittest.mock import MagicMock

import pytest

from trajreason.exporters.base import BaseExporter
from trajreason.exporters.console import ConsoleExporter
from trajreason.exporters.file import FileExporter
from trajreason.exporters.log import LoggingExporter
from trajreason.exporters.multi import MultiExporter
from trajreason.telemetry import Span, get_telemetry, setup_telemetry, trace_run, trace_stage


class RecordingExporter(BaseExporter):
    def __init__(self):
        self.spans = []

    def export(self, span_data):
        self.spans.append(span_data)
        return True


class TestSpan:
    """Tests for Span class."""

    def test_span_creation(self):
        """Test basic span creation."""
        span = Span(trace_id="abc", span_id="123", name="train_step", span_type="TRAIN_STEP", step=7, loss=0.5)

        assert span.trace_id == "abc"
        assert span.span_type == "TRAIN_STEP"
        assert span.step == 7
        assert span.status == "OK"
        assert span.is_error == 0

    def test_span_finish_sets_durations(self):
        """Test that finish() records seconds and milliseconds."""
        span = Span(trace_id="abc", span_id="123", name="predict", span_type="INFERENCE")
        span.finish()

        assert span.duration_s is not None and span.duration_s >= 0
        assert span.duration_ms == pytest.approx(span.duration_s * 1000, abs=1e-3)

    def test_span_set_error(self):
        """Test setting error on span."""
        span = Span(trace_id="abc", span_id="123", name="train", span_type="RUN")
        span.finish(error=ValueError("loss is nan"))

        assert span.status == "ERROR"
        assert span.is_error == 1
        assert span.error_type == "ValueError"
        assert span.error_message == "loss is nan"

    def test_span_to_dict_drops_empty_fields(self):
        """Test span serialization keeps set fields and attributes only."""
        span = Span(trace_id="abc", span_id="123", name="ego_only", span_type="ABLATION", modality="ego_only")
        span.set_attribute("seed", 3)
        span.finish()

        data = span.to_dict()

        assert data["modality"] == "ego_only"
        assert data["seed"] == 3
        assert "loss" not in data
        assert "backbone" not in data


class TestRunTelemetry:
    """Tests for the telemetry manager."""

    def test_start_span_exports_on_exit(self):
        """Test that a span is exported when its block ends."""
        recorder = RecordingExporter()
        telemetry = setup_telemetry("unit", exporter=recorder)

        with telemetry.start_span("predict", "INFERENCE", scene_id="s1") as span:
            assert telemetry.current_span() is span

        assert telemetry.current_span() is None
        assert recorder.spans[0]["scene_id"] == "s1"
        assert recorder.spans[0]["run_name"] == "unit"
        assert span.duration_s >= 0

    def test_nested_spans_link_parent(self):
        """Test that nested spans carry the parent span id and share a trace."""
        recorder = RecordingExporter()
        telemetry = setup_telemetry("unit", exporter=recorder)

        with telemetry.start_span("evaluate", "EVALUATION") as outer:
            with telemetry.start_span("predict", "INFERENCE"):
                pass

        inner_data, outer_data = recorder.spans
        assert inner_data["parent_span_id"] == outer.span_id
        assert inner_data["trace_id"] == outer_data["trace_id"]

    def test_start_span_records_error_and_reraises(self):
        """Test that an exception marks the span and propagates."""
        recorder = RecordingExporter()
        telemetry = setup_telemetry("unit", exporter=recorder)

        with pytest.raises(RuntimeError):
            with telemetry.start_span("train_step", "TRAIN_STEP"):
                raise RuntimeError("diverged")

        assert recorder.spans[0]["status"] == "ERROR"
        assert recorder.spans[0]["error_message"] == "diverged"

    def test_send_span_skips_empty_values(self):
        """Test that send_span drops None attributes."""
        recorder = RecordingExporter()
        telemetry = setup_telemetry("unit", exporter=recorder)

        telemetry.send_span("CHECKPOINT", "save", duration_ms=1.5, step=10, loss=None)

        data = recorder.spans[0]
        assert data["step"] == 10
        assert "loss" not in data
        assert data["duration_ms"] == 1.5


class TestSetup:
    """Tests for setup_telemetry and get_telemetry."""

    def test_setup_default_is_logging(self):
        """Test that the default exporter routes spans to logging."""
        telemetry = setup_telemetry(run_name="default-run")

        assert telemetry.run_name == "default-run"
        assert isinstance(telemetry.exporter, LoggingExporter)
        assert get_telemetry() is telemetry

    def test_setup_file_with_console(self, tmp_path):
        """Test that file plus console combines into a MultiExporter."""
        telemetry = setup_telemetry(
            run_name="overfit", exporter="file", file_path=str(tmp_path / "loss.jsonl"), console=True
        )

        assert isinstance(telemetry.exporter, MultiExporter)
        kinds = {type(e) for e in telemetry.exporter.exporters}
        assert kinds == {FileExporter, ConsoleExporter}

    def test_setup_from_config_list(self, tmp_path):
        """Test setup with a list of exporter configs."""
        telemetry = setup_telemetry(exporter=[
            {"type": "file", "path": str(tmp_path / "a.jsonl")},
            {"type": "console", "colored": False},
        ])

        assert len(telemetry.exporter.exporters) == 2

    def test_setup_file_without_path_raises(self):
        """Test that the file exporter requires a path."""
        with pytest.raises(ValueError):
            setup_telemetry(exporter="file")

    def test_setup_unknown_exporter_raises(self):
        """Test unknown exporter types are rejected."""
        with pytest.raises(ValueError, match="Unknown exporter"):
            setup_telemetry(exporter="splunk")

    def test_setup_starts_exporter(self):
        """Test that setup starts the chosen exporter."""
        exporter = MagicMock(spec=BaseExporter)

        setup_telemetry(exporter=exporter)

        exporter.start.assert_called_once()


class TestDecorators:
    """Tests for tracing decorators."""

    def test_trace_stage_emits_span(self):
        """Test that trace_stage sends one STAGE span per call."""
        recorder = RecordingExporter()
        setup_telemetry(exporter=recorder)

        @trace_stage("load_scenes")
        def load():
            return 3

        assert load() == 3
        assert recorder.spans[0]["span_type"] == "STAGE"
        assert recorder.spans[0]["name"] == "load_scenes"

    def test_trace_stage_records_errors(self):
        """Test that a failing stage emits an error span and re-raises."""
        recorder = RecordingExporter()
        setup_telemetry(exporter=recorder)

        @trace_stage()
        def broken():
            raise KeyError("scene")

        with pytest.raises(KeyError):
            broken()

        assert recorder.spans[0]["name"] == "broken"
        assert recorder.spans[0]["is_error"] == 1
        assert recorder.spans[0]["error_type"] == "KeyError"

    def test_trace_run_starts_new_trace(self):
        """Test that each traced run gets its own trace id."""
        recorder = RecordingExporter()
        setup_telemetry(exporter=recorder)

        @trace_run("train")
        def run():
            return "done"

        run()
        run()

        assert [s["span_type"] for s in recorder.spans] == ["RUN", "RUN"]
        assert recorder.spans[0]["trace_id"] != recorder.spans[1]["trace_id"]
