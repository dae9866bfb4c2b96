import random
import string

import pytest
from hypothesis import given, strategies as st

from fluc import language
from fluc.language import (DEFAULT_LIBRARY, EmptyOutput, MissionScript,
                           ParseFailure, PrimitiveCall, ValidationFailure,
                           extract_script, parse, render, validate)


# -- extraction -------------------------------------------------------------

def test_extract_fenced_block():
    e = extract_script("```\ntakeoff(20)\n```")
    assert e.text == "takeoff(20)"
    assert e.fenced


def test_extract_ignores_surrounding_prose():
    raw = "Sure, here you go:\n```python\ntakeoff(20)\nland()\n```\nEnjoy!"
    e = extract_script(raw)
    assert e.text == "takeoff(20)\nland()"
    assert e.fenced


def test_extract_unfenced_fallback():
    e = extract_script("takeoff(20)")
    assert e.text == "takeoff(20)"
    assert not e.fenced


def test_extract_empty_raises():
    with pytest.raises(EmptyOutput):
        extract_script("   \n  ")
    with pytest.raises(EmptyOutput):
        extract_script("```\n\n```")


# -- parsing ----------------------------------------------------------------

def test_parse_scenario1_call():
    s = parse("go_to_real_world_coords(41.1783107, -8.591609, 17)")
    assert len(s.calls) == 1
    call = s.calls[0]
    assert call.name == "go_to_real_world_coords"
    assert call.args == (41.1783107, -8.591609, 17.0)
    assert call.line == 1


def test_parse_empty_script():
    with pytest.raises(ParseFailure) as e:
        parse("")
    assert "empty script" in str(e.value)


def test_parse_supply_keyword_lists():
    s = parse("upload_and_start_supply_mission(x=[25,50], y=[50,50], z=[0,0], traffic=[200,200])")
    call = s.calls[0]
    assert call.args == ()
    assert dict(call.kwargs) == {"x": [25.0, 50.0], "y": [50.0, 50.0],
                                 "z": [0.0, 0.0], "traffic": [200.0, 200.0]}


def test_parse_comments_and_blank_lines():
    s = parse("# mission\n\ntakeoff(20)  # climb\n\nland()\n")
    assert [c.name for c in s.calls] == ["takeoff", "land"]
    assert [c.line for c in s.calls] == [3, 5]


def test_parse_scientific_notation_and_signs():
    s = parse("move_relative(+1.5e2, -2E-1, .5)")
    assert s.calls[0].args == (150.0, -0.2, 0.5)


def test_parse_error_carries_line_number():
    with pytest.raises(ParseFailure) as e:
        parse("takeoff(20)\ntakeoff(20) extra")
    assert e.value.errors[0].line == 2


def test_parse_unbalanced_brackets():
    with pytest.raises(ParseFailure):
        parse("fly_waypoints([1, 2, 3, 0)")
    with pytest.raises(ParseFailure):
        parse("takeoff(20")


def test_parse_all_or_nothing():
    with pytest.raises(ParseFailure) as e:
        parse("takeoff(20)\n???\nland()")
    assert len(e.value.errors) == 1


def test_parse_quoted_string():
    s = parse('go_to_place("Porto city hall")')
    assert s.calls[0].args == ("Porto city hall",)


# -- validation -------------------------------------------------------------

def test_validate_list_length_mismatch():
    s = parse("upload_and_start_supply_mission(x=[25,50], y=[50,50], z=[0,0], traffic=[200])")
    with pytest.raises(ValidationFailure) as e:
        validate(s)
    assert "list length mismatch" in str(e.value)


def test_validate_lat_out_of_range():
    s = parse("go_to_real_world_coords(200, 0, 10)")
    with pytest.raises(ValidationFailure) as e:
        validate(s)
    assert "lat" in str(e.value)


def test_validate_unknown_primitive():
    s = parse("warp_drive(9000)")
    with pytest.raises(ValidationFailure) as e:
        validate(s)
    assert "unknown primitive" in str(e.value)


def test_validate_bad_arity():
    with pytest.raises(ValidationFailure):
        validate(parse("takeoff()"))
    with pytest.raises(ValidationFailure):
        validate(parse("takeoff(20, 30)"))


def test_validate_inserts_implicit_takeoff():
    v = validate(parse("go_to_real_world_coords(41.1783107, -8.591609, 17)"))
    assert v.calls[0].name == "takeoff"
    assert v.calls[0].args == (language.DEFAULT_TAKEOFF_ALT_M,)
    assert v.inserted_indices == (0,)


def test_validate_no_insertion_with_explicit_takeoff():
    v = validate(parse("takeoff(10)\nmove_relative(1, 2, 3)"))
    assert v.inserted_indices == ()
    assert len(v.calls) == 2


def test_validate_no_call_after_land():
    with pytest.raises(ValidationFailure) as e:
        validate(parse("takeoff(20)\nland()\nmove_relative(1, 1, 0)"))
    assert "land" in str(e.value)


def test_validate_single_set_return():
    with pytest.raises(ValidationFailure):
        validate(parse("takeoff(20)\nset_return()\nset_return()"))


def test_validate_order_independent_of_registration_order():
    s = parse("takeoff(20)\nmove_relative(1, 2, 3)")
    a = validate(s, DEFAULT_LIBRARY)
    b = validate(s, tuple(reversed(DEFAULT_LIBRARY)))
    assert a.calls == b.calls


# -- rendering --------------------------------------------------------------

def test_render_round_trip_single_call():
    v = parse("takeoff(20)")
    text = render(v)
    assert parse(text).calls == v.calls
    assert render(parse(text)) == text


def test_render_keyword_lists():
    v = parse("upload_and_start_supply_mission(x=[25,50], y=[50,50], z=[0,0], traffic=[200,200])")
    assert "x=[25.0,50.0]" in render(v)


def _structure(script):
    return [(c.name, c.args, c.kwargs) for c in script.calls]


def test_golden_corpus_round_trips(scripts_dir):
    paths = sorted(scripts_dir.glob("*.fms"))
    assert len(paths) == 30
    for path in paths:
        original = parse(path.read_text())
        rendered = render(original)
        assert _structure(parse(rendered)) == _structure(original), path.name
        # a second render is byte-stable
        assert render(parse(rendered)) == rendered, path.name


# -- properties -------------------------------------------------------------

_num = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                 allow_infinity=False).map(lambda x: float(repr(float(x))))
_name = st.text(alphabet=string.ascii_lowercase + "_", min_size=1, max_size=12).filter(
    lambda s: not s.startswith("_"))
_value = st.one_of(
    _num,
    st.lists(_num, min_size=0, max_size=5),
    st.text(alphabet=string.ascii_letters + " .'-", max_size=20),
)


@st.composite
def _calls(draw):
    name = draw(_name)
    args = tuple(draw(st.lists(_value, max_size=4)))
    kw_names = draw(st.lists(_name, max_size=3, unique=True))
    kwargs = tuple((k, draw(_value)) for k in kw_names)
    return PrimitiveCall(name=name, args=args, kwargs=kwargs, line=0)


@given(st.lists(_calls(), min_size=1, max_size=6))
def test_parse_render_identity_on_generated_scripts(calls):
    script = MissionScript(calls=tuple(calls))
    reparsed = parse(render(script))
    assert len(reparsed.calls) == len(calls)
    for got, want in zip(reparsed.calls, calls):
        assert got.name == want.name
        assert got.args == want.args
        assert got.kwargs == want.kwargs


@given(st.text(max_size=200))
def test_parser_never_crashes_on_arbitrary_text(text):
    try:
        script = parse(text)
    except ParseFailure:
        return
    try:
        v = validate(script)
    except ValidationFailure:
        return
    registry = {spec.name for spec in DEFAULT_LIBRARY}
    assert all(c.name in registry for c in v.calls)


def test_fuzz_random_identifiers_never_validate():
    rng = random.Random(7)
    registry = {spec.name for spec in DEFAULT_LIBRARY}
    for _ in range(500):
        name = "".join(rng.choices(string.ascii_lowercase, k=rng.randint(1, 10)))
        if name in registry:
            continue
        with pytest.raises(ValidationFailure):
            validate(parse(f"{name}()"))
