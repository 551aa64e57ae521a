import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from core.engine import (
    EngineError, EvaluationFault, ExprSyntaxError, UnknownIdentifierError, evaluate, evaluate_at, parse,
)
from core.engine.exprparse import MAX_HEIGHT, MAX_NESTING, allowed_variables

coordinate = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)


class ParseTests(SimpleTestCase):

    def test_precedence(self):
        self.assertEqual(evaluate(parse('1 + 2 * 3'), {}), 7.0)
        self.assertEqual(evaluate(parse('2 ^ 3 ^ 2'), {}), 512.0)
        self.assertEqual(evaluate(parse('(1 + 2) * 3'), {}), 9.0)
        self.assertEqual(evaluate(parse('8 / 4 / 2'), {}), 1.0)

    def test_unary_minus_binds_tighter_than_power(self):
        self.assertEqual(evaluate(parse('-2^2'), {}), 4.0)
        self.assertEqual(evaluate(parse('0 - 2^2'), {}), -4.0)
        self.assertEqual(evaluate(parse('2^-1'), {}), 0.5)

    def test_functions(self):
        self.assertEqual(evaluate(parse('min(3, 1, 2)'), {}), 1.0)
        self.assertEqual(evaluate(parse('max(3, 1, 2)'), {}), 3.0)
        self.assertAlmostEqual(evaluate(parse('exp(log(2.5))'), {}), 2.5)
        self.assertAlmostEqual(evaluate(parse('sin(0) + cos(0) + abs(-2) + sqrt(9)'), {}), 6.0)

    def test_derived_variables(self):
        expr = parse('t + r', 2)
        self.assertAlmostEqual(evaluate(expr, {'x1': 3.0, 'y1': 0.0, 'x2': 0.0, 'y2': 4.0}), 30.0)
        self.assertEqual(expr.variables(), {'t', 'r'})

    def test_evaluate_at_broadcasts_constants(self):
        coords = np.zeros((5, 2))
        values = evaluate_at(parse('2', 1), coords)
        self.assertEqual(values.shape, (5,))
        self.assertTrue(np.all(values == 2.0))

    def test_syntax_errors_report_position(self):
        cases = {'1 +': 3, '1 $ 2': 2, '(1 + 2': 6, 'x1 ^ x1': 3, '': 0, '1 2': 2}
        for src, position in cases.items():
            with self.subTest(src=src):
                with self.assertRaises(ExprSyntaxError) as ctx:
                    parse(src, 1)
                self.assertEqual(ctx.exception.position, position)
                self.assertIn(f'at position {position}', str(ctx.exception))

    def test_function_arity(self):
        for src in ('exp(1, 2)', 'min(1)'):
            with self.subTest(src=src):
                with self.assertRaises(ExprSyntaxError):
                    parse(src)

    def test_unknown_identifier(self):
        with self.assertRaises(UnknownIdentifierError) as ctx:
            parse('x1 + x2', 1)
        self.assertEqual(ctx.exception.name, 'x2')
        self.assertEqual(ctx.exception.position, 5)
        self.assertEqual(allowed_variables(1), {'x1', 'y1', 't', 'r'})

    def test_evaluation_faults(self):
        for src in ('1 / (x1 - x1)', 'log(0 * x1)', 'sqrt(x1 - 5)', '(x1 - 5) ^ 0.5'):
            with self.subTest(src=src):
                with self.assertRaises(EvaluationFault):
                    evaluate(parse(src, 1), {'x1': 1.0, 'y1': 0.0})

    def test_fault_names_the_node(self):
        with self.assertRaises(EvaluationFault) as ctx:
            evaluate(parse('1 + log(x1)', 1), {'x1': -1.0, 'y1': 0.0})
        self.assertIn('log(x1)', str(ctx.exception))

    @given(coordinate, coordinate, coordinate, coordinate)
    def test_matches_python_arithmetic(self, x1, y1, x2, y2):
        expr = parse('x1^2 + 2*x1*y2 - y1/(1 + x2^2) + max(x1, y1) * exp(-t)', 2)
        env = {'x1': x1, 'y1': y1, 'x2': x2, 'y2': y2}
        t = x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2
        expected = x1 ** 2 + 2 * x1 * y2 - y1 / (1 + x2 ** 2) + max(x1, y1) * math.exp(-t)
        self.assertAlmostEqual(float(evaluate(expr, env)), expected, delta=1e-9 * (1 + abs(expected)))

    @given(st.lists(st.tuples(coordinate, coordinate), min_size=1, max_size=20))
    def test_vectorized_matches_pointwise(self, points):
        expr = parse('x1*y1 - abs(x1) + t', 1)
        coords = np.array(points)
        values = evaluate_at(expr, coords)
        for point, value in zip(points, values):
            self.assertAlmostEqual(value, float(evaluate(expr, {'x1': point[0], 'y1': point[1]})))


def _binary(parts):
    left, op, right = parts
    return f'({left} {op} {right})'


leaf = st.one_of(
    st.sampled_from(['x1', 'y1', 'x2', 'y2', 't', 'r']),
    st.integers(min_value=0, max_value=99).map(str),
    st.floats(min_value=0, max_value=10, allow_nan=False).map(repr),
)
expression = st.recursive(
    leaf,
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from(['+', '-', '*']), inner).map(_binary),
        inner.map(lambda e: f'-({e})'),
        st.tuples(inner, st.integers(min_value=0, max_value=3)).map(lambda p: f'({p[0]})^{p[1]}'),
        st.tuples(st.sampled_from(['sin', 'cos', 'abs']), inner).map(lambda p: f'{p[0]}({p[1]})'),
        st.tuples(st.sampled_from(['min', 'max']), inner, inner).map(lambda p: f'{p[0]}({p[1]}, {p[2]})'),
    ),
    max_leaves=30,
)
fuzz_text = st.text(alphabet='x1y2tr0123456789.eE+-*/^(), sincoqabmlgp', max_size=60)


class RoundTripTests(SimpleTestCase):

    VALUATIONS = np.random.default_rng(11).uniform(-2.0, 2.0, size=(100, 4))

    @settings(deadline=None)
    @given(expression)
    def test_printed_form_reparses_to_the_same_function(self, src):
        try:
            expr = parse(src, 2)
        except ExprSyntaxError:
            assume(False)
        text = str(expr)
        again = parse(text, 2)
        self.assertEqual(str(again), text)
        np.testing.assert_array_equal(evaluate_at(again, self.VALUATIONS), evaluate_at(expr, self.VALUATIONS))

    def test_large_literals(self):
        expr = parse('2 * 1e308 / 4', 1)
        self.assertEqual(str(parse(str(expr), 1)), str(expr))
        with self.assertRaises(ExprSyntaxError) as ctx:
            parse('1 + 1e999', 1)
        self.assertEqual(ctx.exception.position, 4)
        self.assertIn('out of range', str(ctx.exception))

    def test_negative_exponent_prints_and_reparses(self):
        expr = parse('x1 ^ -2', 1)
        self.assertEqual(float(evaluate(parse(str(expr), 1), {'x1': 2.0, 'y1': 0.0})), 0.25)


class TotalityTests(SimpleTestCase):

    @settings(deadline=None, max_examples=500)
    @given(fuzz_text)
    def test_any_text_parses_or_raises_a_syntax_error(self, src):
        try:
            expr = parse(src, 2)
        except ExprSyntaxError as exc:
            self.assertTrue(0 <= exc.position <= len(src))
            return
        try:
            evaluate_at(expr, np.zeros((3, 4)))
        except EngineError:
            pass

    def test_deep_nesting_is_a_syntax_error(self):
        cases = [
            '(' * 3000 + '1' + ')' * 3000,
            '2^' * 3000 + '2',
            'sin(' * 2500 + 'x1' + ')' * 2500,
            '-(' * 2000 + 'x1' + ')' * 2000,
            ' + '.join(['x1'] * 2500),
        ]
        for src in cases:
            with self.subTest(src=src[:12]):
                with self.assertRaises(ExprSyntaxError) as ctx:
                    parse(src, 1)
                self.assertTrue(0 <= ctx.exception.position <= len(src))

    def test_nesting_limits_are_inclusive(self):
        src = '(' * MAX_NESTING + 'x1' + ')' * MAX_NESTING
        self.assertEqual(str(parse(src, 1)), 'x1')
        with self.assertRaises(ExprSyntaxError):
            parse('(' + src + ')', 1)
        self.assertEqual(evaluate(parse(' + '.join(['1'] * MAX_HEIGHT), 1), {}), float(MAX_HEIGHT))
        with self.assertRaises(ExprSyntaxError):
            parse(' + '.join(['1'] * (MAX_HEIGHT + 1)), 1)
