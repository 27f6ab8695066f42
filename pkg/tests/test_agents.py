from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from autostudio.agents.backends import ScriptedMockBackend, transcript_key
from autostudio.agents.loops import AgentPipeline
from autostudio.agents.outputs import (
    parse_manager_output,
    parse_supervisor_advice,
    serialize_manager_output,
    serialize_supervisor_advice,
)
from autostudio.agents.prompts import system_text
from autostudio.errors import ParseFailure
from autostudio.layout.rules import validate
from autostudio.model import (
    BoundingBox,
    FrameSize,
    LayoutEntry,
    ManagerComponentEntry,
    ManagerOutput,
    ManagerSubjectEntry,
    RawLayout,
    SubjectId,
    SupervisorAdvice,
)

FRAME = FrameSize(1024, 1024)

MANAGER_TEXT = """<output>
<global>a dog playing in a sunny park</global>
<background>a green park with tall trees</background>
["dog, a golden dog, trotting over the grass", "1"]
["head, the dog's head, with floppy ears", "1-1"]
["furry torso, the dog's torso, golden fur", "1-2"]
["tail, the dog's tail, wagging happily", "1-3"]
</output>"""


def test_parse_manager_fixture():
    out = parse_manager_output(MANAGER_TEXT)
    assert out.global_caption == "a dog playing in a sunny park"
    assert len(out.subjects) == 1
    dog = out.subjects[0]
    assert dog.id.render() == "1"
    assert dog.name == "dog"
    assert [c.id.render() for c in dog.components] == ["1-1", "1-2", "1-3"]


def test_manager_round_trip():
    out = parse_manager_output(MANAGER_TEXT)
    assert parse_manager_output(serialize_manager_output(out)) == out


def test_manager_rejects_component_without_triple_caption():
    bad = MANAGER_TEXT.replace(
        '["head, the dog\'s head, with floppy ears", "1-1"]', '["head", "1-1"]'
    )
    with pytest.raises(ParseFailure):
        parse_manager_output(bad)


def test_manager_rejects_component_before_subject():
    with pytest.raises(ParseFailure):
        parse_manager_output(
            "<output>\n<global>x</global>\n<background>y</background>\n"
            '["head, a head, detailed", "2-1"]\n</output>'
        )


def test_manager_requires_captions():
    with pytest.raises(ParseFailure):
        parse_manager_output('<output>["dog, a dog, here", "1"]</output>')


@given(st.text(max_size=300))
def test_manager_parser_total(text):
    try:
        parse_manager_output(text)
    except ParseFailure:
        pass


def test_supervisor_advice_round_trip():
    advice = SupervisorAdvice(suggestions=["Increase the spacing between subjects 1 and 2."])
    parsed = parse_supervisor_advice(serialize_supervisor_advice(advice), FRAME)
    assert parsed.suggestions == advice.suggestions
    assert not parsed.compliant


def test_supervisor_compliant_marker():
    parsed = parse_supervisor_advice("<output>\n<advice>\ncompliant\n</advice>\n</output>", FRAME)
    assert parsed.compliant and parsed.suggestions == []


def test_supervisor_missing_envelope_is_parse_failure():
    with pytest.raises(ParseFailure):
        parse_supervisor_advice("all good", FRAME)


def test_supervisor_revised_layout_extracted():
    text = (
        "<output>\n<advice>\nMove subject 2 to the right.\n"
        '["dog", [100, 100, 300, 300], "1"]\n'
        "</advice>\n</output>"
    )
    parsed = parse_supervisor_advice(text, FRAME)
    assert parsed.revised_layout is not None
    assert parsed.revised_layout.entries[0].id.render() == "1"


# --- scripted mock + synthesizer ---


def test_mock_is_deterministic():
    backend = ScriptedMockBackend()
    sys_text = system_text("manager")
    user = "<input>\n<context></context>\n<content>a dog in a park</content>\n</input>"
    assert backend.complete(sys_text, user, 7) == backend.complete(sys_text, user, 7)


def test_transcript_entry_wins_over_synthesizer():
    sys_text = system_text("manager")
    user = "<input>\n<context></context>\n<content>a dog in a park</content>\n</input>"
    key = transcript_key("manager", user)
    backend = ScriptedMockBackend({key: MANAGER_TEXT})
    assert backend.complete(sys_text, user, 0) == MANAGER_TEXT


def test_pipeline_manager_extracts_dog_with_components():
    pipeline = AgentPipeline(ScriptedMockBackend())
    out = pipeline.run_manager("a dog in a park", history=[])
    assert len(out.subjects) == 1
    dog = out.subjects[0]
    assert dog.id.render() == "1"
    assert dog.name == "dog"
    assert 3 <= len(dog.components) <= 7
    for comp in dog.components:
        assert len(comp.caption.split(",")) >= 3


def test_pipeline_manager_reuses_id_across_turns():
    pipeline = AgentPipeline(ScriptedMockBackend())
    first = pipeline.run_manager("a dog in a park", history=[])
    second = pipeline.run_manager(
        "the dog chases a ball", history=[(first, "a dog in a park")]
    )
    dogs = [s for s in second.subjects if s.name == "dog"]
    assert dogs and dogs[0].id.render() == "1"
    balls = [s for s in second.subjects if s.name == "ball"]
    # ball is not in the lexicon: fine if absent, but no id may collide
    ids = [s.id.render() for s in second.subjects]
    assert len(set(ids)) == len(ids)


def test_pipeline_layout_covers_all_manager_ids():
    pipeline = AgentPipeline(ScriptedMockBackend())
    mgr = pipeline.run_manager("a cat and a dog in a garden", history=[])
    layout = pipeline.run_layout(FRAME, mgr)
    assert {e.id.render() for e in layout.entries} == {s.render() for s in mgr.all_ids()}
    assert validate(layout) == []


def test_pipeline_zero_subject_layout_is_empty():
    pipeline = AgentPipeline(ScriptedMockBackend())
    mgr = ManagerOutput(global_caption="mist", background_caption="grey mist", subjects=[])
    layout = pipeline.run_layout(FRAME, mgr)
    assert layout.entries == []


def test_pipeline_supervisor_flags_overlap_and_refinement_fixes_it():
    pipeline = AgentPipeline(ScriptedMockBackend())
    mgr = ManagerOutput(
        global_caption="two crates",
        background_caption="a warehouse",
        subjects=[
            ManagerSubjectEntry(caption="box, a wooden box, stacked", id=SubjectId.parse("1")),
            ManagerSubjectEntry(caption="box, a wooden box, stacked", id=SubjectId.parse("2")),
        ],
    )
    overlapping = RawLayout(
        frame=FRAME,
        entries=[
            LayoutEntry("box", BoundingBox(300, 300, 300, 300), SubjectId.parse("1")),
            LayoutEntry("box", BoundingBox(380, 300, 300, 300), SubjectId.parse("2")),
        ],
        manager=mgr,
    )
    advice = pipeline.run_supervisor(overlapping)
    assert not advice.compliant
    assert any("spacing" in s.lower() for s in advice.suggestions)
    refined = pipeline.run_layout(FRAME, mgr, advice=advice, prior_layouts=[overlapping])
    assert validate(refined) == []


def test_pipeline_supervisor_compliant_on_clean_layout():
    pipeline = AgentPipeline(ScriptedMockBackend())
    clean = RawLayout(
        frame=FRAME,
        entries=[
            LayoutEntry("adult", BoundingBox(100, 212, 350, 600), SubjectId.parse("1")),
            LayoutEntry("adult", BoundingBox(574, 212, 350, 600), SubjectId.parse("2")),
        ],
    )
    advice = pipeline.run_supervisor(clean)
    assert advice.compliant


def test_invented_layout_ids_rejected():
    mgr = ManagerOutput(
        global_caption="a dog",
        background_caption="a park",
        subjects=[ManagerSubjectEntry(caption="dog, a dog, trotting", id=SubjectId.parse("1"))],
    )

    class Inventor(ScriptedMockBackend):
        def complete(self, system, user, seed):
            return '<output>\n["dog", [100, 100, 300, 300], "1"]\n["ghost", [1, 1, 50, 50], "9"]\n</output>'

    pipeline = AgentPipeline(Inventor(), retries=2)
    with pytest.raises(ParseFailure, match="invented"):
        pipeline.run_layout(FRAME, mgr)


def test_missing_layout_entry_surfaces_as_missing_entry():
    from autostudio.errors import MissingEntry

    mgr = ManagerOutput(
        global_caption="a dog and a cat",
        background_caption="a park",
        subjects=[
            ManagerSubjectEntry(caption="dog, a dog, trotting", id=SubjectId.parse("1")),
            ManagerSubjectEntry(caption="cat, a cat, napping", id=SubjectId.parse("2")),
        ],
    )

    class Forgetful(ScriptedMockBackend):
        def complete(self, system, user, seed):
            return '<output>\n["dog", [100, 100, 300, 300], "1"]\n</output>'

    pipeline = AgentPipeline(Forgetful(), retries=2)
    with pytest.raises(MissingEntry):
        pipeline.run_layout(FRAME, mgr)


def test_composition_note_is_advisory_only():
    # compliant but mass far off-center: still compliant, with a note
    pipeline = AgentPipeline(ScriptedMockBackend())
    corner = RawLayout(
        frame=FRAME,
        entries=[
            LayoutEntry("crate", BoundingBox(0, 0, 300, 300), SubjectId.parse("1")),
        ],
    )
    advice = pipeline.run_supervisor(corner)
    assert advice.compliant
    assert any("composition" in s.lower() for s in advice.suggestions)
    centered = RawLayout(
        frame=FRAME,
        entries=[LayoutEntry("crate", BoundingBox(362, 412, 300, 300), SubjectId.parse("1"))],
    )
    advice2 = pipeline.run_supervisor(centered)
    assert advice2.compliant and advice2.suggestions == []


def test_retry_exhaustion_raises_parse_failure():
    class Garbage(ScriptedMockBackend):
        def complete(self, system, user, seed):
            return "utter nonsense"

    pipeline = AgentPipeline(Garbage(), retries=3)
    with pytest.raises(ParseFailure):
        pipeline.run_manager("a dog", history=[])


def test_retry_recovers_on_second_attempt():
    responses = iter(["garbage", MANAGER_TEXT])

    class FlakyBackend(ScriptedMockBackend):
        def complete(self, system, user, seed):
            return next(responses)

    pipeline = AgentPipeline(FlakyBackend(), retries=3)
    out = pipeline.run_manager("a dog in a park", history=[])
    assert out.subjects[0].id.render() == "1"


def test_manager_components_visible_in_context_keep_ids():
    pipeline = AgentPipeline(ScriptedMockBackend())
    first = pipeline.run_manager("a princess in a castle hall", history=[])
    princess = first.subjects[0]
    comp_ids = {c.caption.split(",")[0]: c.id.render() for c in princess.components}
    second = pipeline.run_manager(
        "the princess wears a golden crown", history=[(first, "a princess in a castle hall")]
    )
    princess2 = [s for s in second.subjects if s.name == "princess"][0]
    for comp in princess2.components:
        name = comp.caption.split(",")[0]
        if name in comp_ids:
            assert comp.id.render() == comp_ids[name]
    crowns = [c for c in princess2.components if "crown" in c.caption]
    assert crowns, "requested accessory missing"
