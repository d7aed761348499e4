import random

import pytest
from hypothesis import given, settings, strategies as st

from labloop.errors import DuplicateSkillError, SkillAccessError
from labloop.skills import (
    footprint,
    materialize,
    scan_skills,
    trigger_skills,
    view_for_agent,
)
from labloop.tokens import whitespace_tokens


def write_skill(folder, filename, name, desc, agents, preload="", keywords="", body="body text"):
    content = (
        "---\n"
        f"name: {name}\n"
        f"desc: {desc}\n"
        f"agents: {agents}\n"
        f"preload: {preload}\n"
        f"keywords: {keywords}\n"
        "---\n"
        f"{body}\n"
    )
    path = folder / filename
    path.write_text(content)
    return path


def words(n, seed="w"):
    return " ".join(f"{seed}{i}" for i in range(n))


class TestScan:
    def test_empty_folder(self, tmp_path):
        registry = scan_skills([tmp_path])
        assert len(registry) == 0
        assert registry.diagnostics == []

    def test_preload_outside_agents_rejected(self, tmp_path):
        write_skill(tmp_path, "bad.md", "s1", "d", agents="experiment", preload="ideation")
        registry = scan_skills([tmp_path])
        assert len(registry) == 0
        assert len(registry.diagnostics) == 1
        assert "not a subset" in registry.diagnostics[0][1]

    def test_three_valid_one_malformed(self, tmp_path):
        for i in range(3):
            write_skill(tmp_path, f"ok{i}.md", f"skill-{i}", "d", agents="data")
        (tmp_path / "broken.md").write_text("no front matter here")
        registry = scan_skills([tmp_path])
        assert len(registry) == 3
        assert len(registry.diagnostics) == 1

    def test_duplicate_name_across_folders_is_an_error(self, tmp_path):
        one = tmp_path / "one"
        two = tmp_path / "two"
        one.mkdir()
        two.mkdir()
        write_skill(one, "a.md", "dup", "d", agents="data")
        write_skill(two, "b.md", "dup", "d", agents="data")
        with pytest.raises(DuplicateSkillError) as err:
            scan_skills([one, two])
        assert "a.md" in str(err.value) and "b.md" in str(err.value)

    def test_rescan_is_idempotent(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", "alpha", agents="data,experiment",
                    preload="data", keywords="plot")
        write_skill(tmp_path, "b.md", "s2", "beta", agents="ideation")
        first = scan_skills([tmp_path])
        second = scan_skills([tmp_path])
        assert first.skills == second.skills
        assert first.diagnostics == second.diagnostics

    def test_missing_required_field_diagnosed(self, tmp_path):
        (tmp_path / "nodesc.md").write_text("---\nname: x\nagents: data\n---\nbody")
        registry = scan_skills([tmp_path])
        assert len(registry) == 0
        assert "desc" in registry.diagnostics[0][1]


class TestView:
    def test_role_restriction(self, tmp_path):
        write_skill(tmp_path, "a.md", "exp-only", "d", agents="experiment")
        registry = scan_skills([tmp_path])
        assert "exp-only" not in view_for_agent(registry, "ideation")
        assert "exp-only" in view_for_agent(registry, "experiment")

    def test_preloaded_bodies_materialized_from_start(self, tmp_path):
        write_skill(tmp_path, "a.md", "pre", "d", agents="experiment",
                    preload="experiment", body=words(10))
        registry = scan_skills([tmp_path])
        view = view_for_agent(registry, "experiment")
        assert view.invoked == {"pre"}
        assert footprint(view).materialized == 10

    def test_empty_registry_empty_view(self, tmp_path):
        registry = scan_skills([tmp_path])
        view = view_for_agent(registry, "data")
        assert view.skills == []
        assert footprint(view).total == 0


class TestTrigger:
    def build(self, tmp_path):
        write_skill(tmp_path, "a.md", "plotting-recipes", "d", agents="data",
                    keywords="plot, spectra")
        write_skill(tmp_path, "b.md", "cleaning", "d", agents="data",
                    keywords="data cleaning")
        return view_for_agent(scan_skills([tmp_path]), "data")

    def test_whole_word_match(self, tmp_path):
        view = self.build(tmp_path)
        assert trigger_skills("please plot the spectra", view) == ["plotting-recipes"]

    def test_substring_does_not_match(self, tmp_path):
        view = self.build(tmp_path)
        assert trigger_skills("plotting the results", view) == []

    def test_multiword_keyword(self, tmp_path):
        view = self.build(tmp_path)
        assert trigger_skills("run data cleaning first", view) == ["cleaning"]
        assert trigger_skills("cleaning the data", view) == []

    def test_case_folded(self, tmp_path):
        view = self.build(tmp_path)
        assert trigger_skills("PLOT everything", view) == ["plotting-recipes"]

    def test_no_keywords_no_matches(self, tmp_path):
        write_skill(tmp_path, "c.md", "plain", "d", agents="data")
        view = view_for_agent(scan_skills([tmp_path]), "data")
        assert trigger_skills("anything at all", view) == []


class TestMaterializeAndFootprint:
    def test_catalogue_only_footprint(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", words(12, "a"), agents="data")
        write_skill(tmp_path, "b.md", "s2", words(18, "b"), agents="data")
        view = view_for_agent(scan_skills([tmp_path]), "data")
        fp = footprint(view)
        assert fp.catalogue == 30
        assert fp.materialized == 0
        assert fp.total == 30

    def test_first_materialization_adds_body_tokens(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", words(12, "a"), agents="data",
                    body=words(200, "c"))
        write_skill(tmp_path, "b.md", "s2", words(18, "b"), agents="data")
        view = view_for_agent(scan_skills([tmp_path]), "data")
        materialize(view, "s1")
        assert footprint(view).total == 230

    def test_second_materialization_is_free(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", words(12, "a"), agents="data",
                    body=words(200, "c"))
        view = view_for_agent(scan_skills([tmp_path]), "data")
        materialize(view, "s1")
        before = footprint(view).total
        materialize(view, "s1")
        assert footprint(view).total == before

    def test_new_uninvoked_skill_costs_only_its_desc(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", words(12, "a"), agents="data")
        view = view_for_agent(scan_skills([tmp_path]), "data")
        base = footprint(view).total
        write_skill(tmp_path, "b.md", "s2", words(5, "b"), agents="data",
                    body=words(500, "z"))
        view2 = view_for_agent(scan_skills([tmp_path]), "data")
        assert footprint(view2).total == base + 5

    def test_wrong_role_denied(self, tmp_path):
        write_skill(tmp_path, "a.md", "s1", "d", agents="experiment")
        registry = scan_skills([tmp_path])
        view = view_for_agent(registry, "ideation")
        with pytest.raises(SkillAccessError):
            materialize(view, "s1")

    def test_footprint_monotone_within_session(self, tmp_path):
        for i in range(5):
            write_skill(tmp_path, f"s{i}.md", f"s{i}", words(3, f"d{i}"),
                        agents="data", body=words(7 + i, f"b{i}"))
        view = view_for_agent(scan_skills([tmp_path]), "data")
        totals = [footprint(view).total]
        for i in (2, 0, 2, 4, 1):
            materialize(view, f"s{i}")
            totals.append(footprint(view).total)
        assert totals == sorted(totals)


class TestFootprintLinearity:
    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_random_registries_sum_exactly(self, data):
        n_skills = data.draw(st.integers(min_value=0, max_value=8))
        desc_lens = [data.draw(st.integers(min_value=1, max_value=30)) for _ in range(n_skills)]
        body_lens = [data.draw(st.integers(min_value=0, max_value=100)) for _ in range(n_skills)]
        from labloop.skills.registry import Skill, SkillRegistry
        registry = SkillRegistry()
        for i in range(n_skills):
            registry.skills[f"s{i}"] = Skill(
                name=f"s{i}", desc=words(desc_lens[i], f"d{i}"),
                agents=frozenset({"data"}), preload=frozenset(),
                body=words(body_lens[i], f"b{i}"), keywords=(), source="mem")
        view = view_for_agent(registry, "data")
        invoked = data.draw(st.sets(st.integers(min_value=0, max_value=max(0, n_skills - 1)))
                            if n_skills else st.just(set()))
        for i in invoked:
            materialize(view, f"s{i}")
        fp = footprint(view, whitespace_tokens)
        assert fp.catalogue == sum(desc_lens)
        assert fp.materialized == sum(body_lens[i] for i in invoked)
        assert fp.total == fp.catalogue + fp.materialized


class TestRoleSoundness:
    def test_fuzz_no_body_leaks(self, tmp_path):
        rng = random.Random(31)
        roles = ["ideation", "data", "experiment", "critic"]
        allowed = {}
        for i in range(20):
            agents = rng.sample(roles, rng.randint(1, len(roles)))
            preload = [a for a in agents if rng.random() < 0.3]
            write_skill(tmp_path, f"s{i}.md", f"s{i}", f"desc {i}",
                        agents=",".join(agents), preload=",".join(preload))
            allowed[f"s{i}"] = set(agents)
        registry = scan_skills([tmp_path])
        for role in roles:
            view = view_for_agent(registry, role)
            for name, agent_set in allowed.items():
                if role in agent_set:
                    assert materialize(view, name) is not None
                else:
                    assert name not in view
                    with pytest.raises(SkillAccessError):
                        materialize(view, name)
