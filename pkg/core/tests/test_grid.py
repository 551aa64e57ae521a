import numpy as np
from django.test import SimpleTestCase

from core.engine import ContractError, parse
from core.engine.grid import (
    BOUNDARY_ADJACENT, INTERIOR, ball_preset, build_domain, build_preset_domain, canonicalize,
    custom_preset, direction_set, ellipsoid_preset, polydisc_preset, two_balls_preset,
)


def disk(h=0.25, R=1.0):
    return build_preset_domain(ball_preset(1, R), h)


def node_at(domain, point):
    distance = np.abs(domain.coords - np.asarray(point)).max(axis=1)
    return int(np.argmin(distance))


class DirectionTests(SimpleTestCase):

    def test_canonical_form(self):
        self.assertEqual(canonicalize([(2, 0), (0, 2)]), ((1, 0), (0, 1)))
        self.assertEqual(canonicalize([(0, 1), (0, 0)]), ((1, 0), (0, 0)))
        self.assertEqual(canonicalize([(-1, 0), (0, -1)]), ((1, 0), (0, 1)))
        self.assertEqual(canonicalize([(1, 1), (2, 0)]), ((1, 0), (1, -1)))
        with self.assertRaises(ContractError):
            canonicalize([(0, 0), (0, 0)])

    def test_width_one_in_two_dimensions(self):
        dirs = direction_set(2, 1)
        self.assertEqual(len(dirs), 6)
        self.assertEqual(dirs.members[:2], (((1, 0), (0, 0)), ((0, 0), (1, 0))))
        for w in (((1, 0), (1, 0)), ((1, 0), (-1, 0)), ((1, 0), (0, 1)), ((1, 0), (0, -1))):
            self.assertIn(w, dirs.members)
        self.assertEqual(dirs.index(((0, 2), (0, 2))), dirs.index(((1, 0), (1, 0))))
        self.assertEqual(dirs.arm_offsets().shape, (6, 4, 4))

    def test_arm_offsets_rotate_by_i(self):
        offsets = direction_set(1, 1).arm_offsets()
        self.assertEqual(offsets.tolist(), [[[1, 0], [-1, 0], [0, 1], [0, -1]]])

    def test_wider_sets_are_distinct_lines(self):
        dirs = direction_set(2, 2)
        self.assertGreater(len(dirs), 6)
        self.assertEqual(len({canonicalize(w) for w in dirs}), len(dirs))
        self.assertTrue(set(direction_set(2, 1).members) <= set(dirs.members))
        self.assertEqual(dirs.members[:2], direction_set(2, 1).members[:2])

    def test_rejected_arguments(self):
        with self.assertRaises(ContractError):
            direction_set(2, 0)
        with self.assertRaises(ContractError):
            direction_set(3, 1)


class DomainTests(SimpleTestCase):

    def test_disk_node_count(self):
        domain = disk()
        self.assertEqual(domain.size, 45)
        self.assertEqual(domain.shape, (11, 11))
        self.assertEqual(domain.counts()['interior'], 45)
        self.assertTrue(np.all(domain.level_at(domain.coords) < 0))

    def test_classification(self):
        domain = disk()
        counts = domain.counts()
        self.assertEqual(sum(counts.values()), 121)
        self.assertGreater(counts['boundary_adjacent'], 0)
        self.assertEqual(domain.classification[5, 5], INTERIOR)
        self.assertEqual(domain.classification[9, 5], BOUNDARY_ADJACENT)

    def test_lookup(self):
        domain = disk()
        origin = node_at(domain, (0.0, 0.0))
        self.assertEqual(domain.lookup(domain.multi[origin])[0], origin)
        self.assertEqual(domain.lookup(np.array([[0, 0], [20, 0]])).tolist(), [-1, -1])

    def test_rejects_bad_boxes(self):
        with self.assertRaises(ContractError):
            build_domain(1, 0.25, parse('t - 1', 1), [(-0.5, 0.5)])
        with self.assertRaises(ContractError):
            build_domain(1, 0.25, parse('1', 1), [(-1, 1)])
        with self.assertRaises(ContractError):
            build_domain(1, -0.25, parse('t - 1', 1), [(-2, 2)])
        with self.assertRaises(ContractError):
            build_domain(3, 0.25, parse('t - 1', 3), [(-2, 2)])

    def test_presets(self):
        self.assertTrue(ball_preset(2).b_regular)
        self.assertIsNone(polydisc_preset(2).psi)
        self.assertTrue(polydisc_preset(1).b_regular)
        ellipse = build_preset_domain(ellipsoid_preset(1, [1.0]), 0.25)
        self.assertEqual(ellipse.size, disk().size)
        lens = build_preset_domain(two_balls_preset(1, 1.0, 1.0, 0.5), 0.25)
        self.assertLess(lens.size, disk().size)
        with self.assertRaises(ContractError):
            ellipsoid_preset(2, [1.0, -1.0])
        square = build_preset_domain(custom_preset(1, 'max(abs(x1), abs(y1)) - 0.6', 1.0), 0.25)
        self.assertEqual(square.size, 25)


class CrossingTests(SimpleTestCase):

    def test_boundary_crossing(self):
        domain = disk()
        rho = domain.boundary_crossing([0.9, 0.0], [0.2, 0.0])
        self.assertAlmostEqual(rho, 0.5, places=9)
        with self.assertRaises(ContractError):
            domain.boundary_crossing([0.0, 0.0], [0.1, 0.0])
        with self.assertRaises(ContractError):
            domain.boundary_crossing([2.0, 0.0], [0.1, 0.0])

    def test_crossings_are_cached(self):
        domain = disk()
        node = node_at(domain, (0.75, 0.0))
        first = domain.crossings([node], (1, 0))
        cached = len(domain._crossings)
        second = domain.crossings([node], (1, 0))
        self.assertEqual(first.tolist(), second.tolist())
        self.assertEqual(len(domain._crossings), cached)

    def test_arms_shorten_at_the_boundary(self):
        domain = disk()
        node = node_at(domain, (0.75, 0.0))
        armset = domain.arms(node, ((1, 0),))
        plus, minus, rot_plus, rot_minus = armset.arms
        self.assertEqual(plus.kind, 'boundary')
        self.assertAlmostEqual(plus.rho, 1.0, places=9)
        self.assertAlmostEqual(plus.point[0], 1.0, places=9)
        self.assertEqual(minus.kind, 'node')
        self.assertEqual(minus.target, node_at(domain, (0.5, 0.0)))
        self.assertEqual(rot_plus.kind, 'node')
        self.assertEqual(rot_minus.kind, 'node')
        with self.assertRaises(ContractError):
            domain.arms(domain.size, ((1, 0),))

    def test_near_boundary_nodes_are_slaved(self):
        domain = disk(R=0.5 + 1e-10)
        table = domain.arm_table(direction_set(1, 1))
        self.assertEqual(int(table.slaved.sum()), 4)
        node = node_at(domain, (0.5, 0.0))
        self.assertTrue(table.slaved[node])
        self.assertAlmostEqual(np.hypot(*table.slave_points[node]), 0.5 + 1e-10, places=9)
        self.assertTrue(np.all(table.rho >= 1e-8))
