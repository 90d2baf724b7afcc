import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scaffolding.teacher import (
    Curriculum,
    CurriculumPhase,
    ImportanceTracker,
    QAPair,
    TravelTeacher,
    detect_plateau,
    generate_qa_dialog,
    importance,
    load_rules,
    parse_rules,
    update_episode_attention,
)


class TestImportance:
    def test_cold_start_is_zero(self):
        assert importance(np.array([0.2, 0.9]), ImportanceTracker.zeros(2)) == 0.0

    def test_tracker_is_running_half_average(self):
        tr = ImportanceTracker.zeros(2)
        tr = update_episode_attention(tr, np.array([1.0, 0.0]))
        tr = update_episode_attention(tr, np.array([0.0, 1.0]))
        np.testing.assert_allclose(tr.m_bar, [0.25, 0.5])

    def test_importance_is_measured_before_the_update(self):
        tr = update_episode_attention(ImportanceTracker.zeros(2), np.array([1.0, 0.0]))
        assert importance(np.array([0.0, 1.0]), tr) == pytest.approx(0.0)
        assert importance(np.array([2.0, 0.0]), tr) == pytest.approx(1.0)

    @given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.lists(st.floats(0, 1), min_size=4, max_size=4))
    def test_nonnegative_attention_gives_nonnegative_importance(self, a, b):
        tr = update_episode_attention(ImportanceTracker.zeros(4), np.array(a))
        assert 0.0 <= importance(np.array(b), tr) <= 1.0 + 1e-12


class TestPlateau:
    @pytest.mark.parametrize(
        "history, expected",
        [
            ([50, 40, 30, 20], False),
            ([50, 49.5, 49.2, 49.1], True),
            ([50, 49, 48, 47], False),  # exactly 1 point each: still progress
            ([50, 50, 50], False),  # not enough evaluations
            ([50, 49.9, 49.8, 40, 39.9], False),
        ],
    )
    def test_detect(self, history, expected):
        assert detect_plateau(history, window=3, min_improvement=1.0) is expected

    def test_curriculum_switches_once_and_stays(self):
        c = Curriculum()
        phases = [c.observe(v) for v in (60, 59.9, 59.8, 59.7, 10, 5)]
        assert phases[:3] == [CurriculumPhase.SINGLE] * 3
        assert phases[3:] == [CurriculumPhase.MULTI] * 3


class TestRules:
    def test_default_rules_load(self):
        rules = load_rules()
        assert len(rules) >= 10

    def test_bad_rule_lines(self):
        with pytest.raises(ValueError):
            parse_rules("only two\tfields")
        with pytest.raises(ValueError):
            parse_rules("the {X} on my {D}\twhat ?\tY")

    @pytest.mark.parametrize(
        "sentence, qa",
        [
            ("the coffee-shop on my east", ("what is on my east ?", "coffee-shop")),
            ("the coffee-shop is on my east", ("what is the coffee-shop on ?", "east")),
            ("the coffee-shop on the south of the museum", ("what is on the south of the museum ?", "coffee-shop")),
            ("the coffee-shop on the south of the museum", ("what is the coffee-shop south of ?", "museum")),
            ("i am at the park", ("where am i at ?", "park")),
            ("after leaving the park , i reached the museum", ("where did i leave ?", "park")),
        ],
    )
    def test_template_inversion(self, sentence, qa):
        located, _ = TravelTeacher().questions_for(sentence)
        assert qa in located

    def test_heading_without_target_is_fallback_only(self):
        located, fallback = TravelTeacher().questions_for("i am heading north")
        assert located == []
        assert fallback == [("where am i heading ?", "north")]

    def test_slots_must_be_known_words(self):
        located, _ = TravelTeacher().questions_for("the spaceship is on my east")
        assert located == []


class TestQuestionChoice:
    history = ["i am at the park", "i am heading north", "the museum is on my east"]

    def test_high_importance_asks_about_the_current_sentence(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            qa = TravelTeacher().generate(self.history, 0.9, CurriculumPhase.SINGLE, rng)
            assert qa.sources == (3,)

    def test_low_importance_samples_located_sentences(self):
        rng = np.random.default_rng(0)
        sources = {TravelTeacher().generate(self.history, 0.1, CurriculumPhase.SINGLE, rng).sources for _ in range(60)}
        assert sources == {(1,), (3,)}

    def test_none_importance_means_random_sampling(self):
        rng = np.random.default_rng(1)
        sources = {TravelTeacher().generate(self.history, None, CurriculumPhase.SINGLE, rng).sources for _ in range(60)}
        assert sources == {(1,), (3,)}

    def test_fallback_and_empty(self):
        rng = np.random.default_rng(0)
        qa = TravelTeacher().generate(["i am heading north"], 0.9, CurriculumPhase.SINGLE, rng)
        assert (qa.question, qa.answer) == ("where am i heading ?", "north")
        assert TravelTeacher().generate([], 0.9, CurriculumPhase.SINGLE, rng) is None

    def test_multi_sentence_questions_share_the_answer(self):
        history = ["the coffee-shop on the south of the museum", "i am heading east", "the coffee-shop is on my west"]
        rng = np.random.default_rng(0)
        teacher = TravelTeacher(multi_prob=1.0)
        seen = set()
        for _ in range(40):
            qa = teacher.generate(history, 0.9, CurriculumPhase.MULTI, rng)
            if len(qa.sources) == 2:
                seen.add(qa.sources)
                assert qa.answer == "coffee-shop"
                assert qa.question.count("?") == 2
        assert seen == {(1, 3)}

    def test_label_shows_sources(self):
        assert QAPair("where am i at ?", "park", (1, 4)).label() == "(1,4) where am i at ?"


def test_dialog_replay_picks_an_earlier_turn():
    rng = np.random.default_rng(0)
    turns = [("hi", 0), ("i want food", 3)]
    picks = {generate_qa_dialog(turns, rng) for _ in range(50)}
    assert picks == {(0, "hi", 0), (1, "i want food", 3)}
    assert generate_qa_dialog([], rng) is None
