import numpy as np
import pytest

from tvnet.errors import InvalidArgumentError
from tvnet.ising import ThetaFull, exact_pairwise_moments
from tvnet.selection import GridSpec
from tvnet.synthetic import (
    AnchorSequence,
    ScenarioSpec,
    check_protocol_invariants,
    generate_anchors,
    generate_dataset,
    interpolate_parameters,
    run_experiment,
    true_graphs,
)


def default_spec(**kw):
    base = dict(p=20, s_max=4, n=500, anchors=6, edges_per_anchor=15, churn=10,
                replicates=10, scheme="smooth", seed=0)
    base.update(kw)
    return ScenarioSpec(**base)


def max_degree(edges, p):
    deg = np.zeros(p, dtype=int)
    for (u, v) in edges:
        deg[u] += 1
        deg[v] += 1
    return deg.max()


class TestGenerateAnchors:
    def test_counts_and_degree_cap(self):
        spec = default_spec()
        anchors = generate_anchors(spec, seed=1)
        assert len(anchors.graphs) == 6
        for g in anchors.graphs:
            assert len(g) == 15
            assert max_degree(g, 20) <= 4

    def test_consecutive_share_and_union(self):
        spec = default_spec()
        anchors = generate_anchors(spec, seed=2)
        for a, b in zip(anchors.graphs, anchors.graphs[1:]):
            assert len(a & b) == 5
            assert len(a | b) == 25
            assert max_degree(a | b, 20) <= 4

    def test_prototype_values_on_support(self):
        anchors = generate_anchors(default_spec(), seed=3)
        for g, proto in zip(anchors.graphs, anchors.prototypes):
            assert set(proto.couplings) == set(g)
            vals = np.array(list(proto.couplings.values()))
            assert np.all((vals >= 0.5) & (vals <= 1.0))

    def test_seed_determinism(self):
        a = generate_anchors(default_spec(), seed=7)
        b = generate_anchors(default_spec(), seed=7)
        assert a.graphs == b.graphs
        for x, y in zip(a.prototypes, b.prototypes):
            assert x.couplings == y.couplings

    def test_infeasible_spec_rejected(self):
        with pytest.raises(InvalidArgumentError):
            default_spec(p=10)  # union would need 25 edges, cap allows 20


class TestInterpolateParameters:
    def test_support_and_degree_at_every_time(self):
        spec = default_spec(n=100)
        anchors = generate_anchors(spec, seed=4)
        thetas = interpolate_parameters(anchors, spec)
        assert len(thetas) == 100
        for theta in thetas:
            support = theta.edge_set()
            assert len(support) == 25
            assert max_degree(support, 20) <= 4
        check_protocol_invariants(anchors, thetas, spec)

    def test_piecewise_is_prototype_average(self):
        graphs = [frozenset({(0, 1)}), frozenset({(0, 1)})]
        protos = [ThetaFull(p=3, couplings={(0, 1): 0.6}), ThetaFull(p=3, couplings={(0, 1): 0.8})]
        spec = ScenarioSpec(p=3, s_max=2, n=10, anchors=2, edges_per_anchor=1, churn=0,
                            replicates=1, scheme="piecewise", seed=0)
        thetas = interpolate_parameters(AnchorSequence(graphs, protos), spec)
        assert all(t.couplings[(0, 1)] == pytest.approx(0.7, abs=1e-15) for t in thetas)

    def test_smooth_interior_interpolation_fractions(self):
        graphs = [frozenset({(0, 1)}), frozenset({(0, 1)})]
        protos = [ThetaFull(p=3, couplings={(0, 1): 0.5}), ThetaFull(p=3, couplings={(0, 1): 1.0})]
        spec = ScenarioSpec(p=3, s_max=2, n=10, anchors=2, edges_per_anchor=1, churn=0,
                            replicates=1, scheme="smooth", seed=0)
        thetas = interpolate_parameters(AnchorSequence(graphs, protos), spec)
        # 10 points strictly between the prototypes: fractions j/11
        vals = [t.couplings[(0, 1)] for t in thetas]
        expected = [0.5 + (j / 11) * 0.5 for j in range(1, 11)]
        assert np.allclose(vals, expected, atol=1e-15)

    def test_smooth_scheme_consecutive_difference_bound(self):
        spec = default_spec(n=200)
        anchors = generate_anchors(spec, seed=5)
        thetas = interpolate_parameters(anchors, spec)
        mats = np.array([t.matrix() for t in thetas])
        steps = np.abs(np.diff(mats, axis=0)).max(axis=(1, 2))
        proto_mats = [t.matrix() for t in anchors.prototypes]
        max_jump = max(
            np.abs(b - a).max() for a, b in zip(proto_mats, proto_mats[1:])
        )
        segments = spec.anchors - 1
        # piecewise-linear in time; boundary steps can stack two segment slopes
        bound = 2 * segments * max_jump / spec.n + 1e-12
        assert steps.max() <= bound


class TestGenerateDataset:
    def test_shapes_and_values(self):
        spec = default_spec(p=6, n=12, anchors=3, edges_per_anchor=5, churn=2)
        anchors = generate_anchors(spec, seed=6)
        thetas = interpolate_parameters(anchors, spec)
        data = generate_dataset(thetas, 3, seed=0, burn_in=50)
        assert data.n_times == 12 and data.p == 6
        assert all(b.shape == (3, 6) for b in data.observations)
        assert np.all(np.abs(data.x) == 1.0)

    def test_seed_determinism(self):
        thetas = [ThetaFull(p=4, couplings={(0, 1): 0.8})] * 5
        a = generate_dataset(thetas, 2, seed=3, burn_in=20)
        b = generate_dataset(thetas, 2, seed=3, burn_in=20)
        assert np.array_equal(a.x, b.x)
        c = generate_dataset(thetas, 2, seed=4, burn_in=20)
        assert not np.array_equal(a.x, c.x)

    def test_constant_theta_moments_match_enumeration(self):
        theta = ThetaFull(p=4, couplings={(0, 1): 0.9, (2, 3): 0.7, (1, 2): 0.5})
        thetas = [theta] * 400
        data = generate_dataset(thetas, 10, seed=5, burn_in=300)
        emp = data.x.T @ data.x / data.n_obs
        assert np.abs(emp - exact_pairwise_moments(theta)).max() < 0.05


class TestTrueGraphs:
    def test_edges_follow_support(self):
        thetas = [ThetaFull(p=3, couplings={(0, 1): 0.5}), ThetaFull(p=3, couplings={(1, 2): -0.4})]
        seq = true_graphs(thetas, np.array([0.5, 1.0]))
        assert seq.edge_sets() == (frozenset({(0, 1)}), frozenset({(1, 2)}))


class TestRunExperiment:
    def test_smoke_and_determinism(self):
        spec = ScenarioSpec(p=6, s_max=3, n=50, anchors=3, edges_per_anchor=5, churn=2,
                            replicates=2, scheme="smooth", seed=11)
        grid = GridSpec(lambda1_grid=np.array([0.12]), h_grid=np.array([0.3]),
                        lambda_tv_grid=np.array([0.1]))
        report = run_experiment(spec, ["smooth", "static"], grid, runs=1, k_values=[1, 2],
                                burn_in=100)
        assert {r.k for r in report.rows} == {1, 2}
        assert {r.method for r in report.rows} == {"smooth", "static"}
        assert {r.symmetrization for r in report.rows} == {"min", "max"}
        assert all(0.0 <= r.f1 <= 1.0 for r in report.rows)
        summary = report.summary()
        assert all(row.runs == 1 for row in summary)

        again = run_experiment(spec, ["smooth", "static"], grid, runs=1, k_values=[1, 2],
                               burn_in=100, threads=3)
        for r1, r2 in zip(report.rows, again.rows):
            assert (r1.precision, r1.recall, r1.f1) == (r2.precision, r2.recall, r2.f1)

    def test_k_values_validated(self):
        spec = ScenarioSpec(p=4, s_max=3, n=10, anchors=2, edges_per_anchor=3, churn=1,
                            replicates=2, scheme="piecewise", seed=0)
        with pytest.raises(InvalidArgumentError):
            run_experiment(spec, ["static"], GridSpec(lambda1_grid=np.array([0.1])),
                           runs=1, k_values=[5])
