"""Registry of built-in target functions and their mutation corpus.

Every builtin carries its host source text (the "twin"), the callable
exec'd from that same text, ten canonical seed inputs, and the name of the
bounded input grid used to brute-force-verify mutants against it. The
reference executor serves these under ``builtin:<name>`` URIs; worker-backed
runs send the twin source over the wire, so both routes share one truth.

Mutants are single-edit variants (arithmetic/comparison operator swaps,
constant tweaks, off-by-one bounds, call/argument deletions, name swaps).
Each is pre-verified non-equivalent over its grid by the test suite before
the oracle's detection rate is measured against it.
"""

from __future__ import annotations

import textwrap
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .values import ArgTuple, from_python

__all__ = ["BuiltinSpec", "MutantSpec", "registry", "mutants", "builtin_uri"]


@dataclass(frozen=True)
class BuiltinSpec:
    name: str
    arity: int
    source: str
    fn: Callable
    seeds: tuple[ArgTuple, ...]
    grid: str
    tags: tuple[str, ...] = ()

    @property
    def loc(self) -> int:
        return len(self.source.strip().splitlines())


@dataclass(frozen=True)
class MutantSpec:
    name: str
    builtin: str
    operator: str
    source: str


def builtin_uri(name: str) -> str:
    return f"builtin:{name}"


def _args(*host_args) -> ArgTuple:
    return tuple(from_python(a, opaque_ok=False) for a in host_args)


_SOURCES: dict[str, str] = {}
_SEEDS: dict[str, list] = {}
_GRIDS: dict[str, str] = {}
_TAGS: dict[str, tuple[str, ...]] = {}


def _builtin(name: str, source: str, seeds: list, grid: str, tags: tuple[str, ...] = ()):
    _SOURCES[name] = textwrap.dedent(source).strip() + "\n"
    _SEEDS[name] = seeds
    _GRIDS[name] = grid
    _TAGS[name] = tags


_builtin(
    "has_unique_elements",
    """
    def has_unique_elements(lst):
        return len(lst) == len(set(lst))
    """,
    [
        ([1, 2, 3, 4, 5],),
        ([1, 2, 2, 4, 5],),
        (["a", "b", "c", "d", "e"],),
        (["apple", "banana", "apple"],),
        ([],),
        ([10, 20, 30, 40, 50, 60],),
        ([10, 20, 30, 30, 50, 60],),
        (["x", "y", "z"],),
        ([1, 1, 1, 1],),
        (list(range(100)),),
    ],
    grid="small_mixed_lists",
    tags=("list", "bool", "raises-on-unhashable"),
)

_builtin(
    "sum_list",
    """
    def sum_list(lst):
        total = 0
        for x in lst:
            total += x
        return total
    """,
    [
        ([],),
        ([1, 2, 3],),
        ([-1, 1],),
        ([10],),
        ([0, 0, 0],),
        ([5, -2, 7, 1],),
        ([100, 200],),
        ([-5, -5, -5],),
        ([1, 1, 1, 1, 1, 1, 1, 1, 1, 1],),
        ([3, 1, 4, 1, 5, 9, 2, 6],),
    ],
    grid="small_int_lists",
    tags=("list", "number"),
)

_builtin(
    "reverse_string",
    """
    def reverse_string(s):
        return s[::-1]
    """,
    [
        ("",),
        ("a",),
        ("ab",),
        ("abc",),
        ("racecar",),
        ("hello world",),
        ("AaBb",),
        ("12321",),
        ("xyzzy",),
        ("noon",),
    ],
    grid="abc_strings",
    tags=("string",),
)

_builtin(
    "abs_sort",
    """
    def abs_sort(lst):
        return sorted(lst, key=abs)
    """,
    [
        ([],),
        ([3, -1, 2],),
        ([-5, -10, 4],),
        ([0],),
        ([1, -1, 2, -2],),
        ([7, 7, -7],),
        ([10, -3, 5, -8, 2],),
        ([-100],),
        ([6, 5, -4],),
        ([2, -3, 1, 0],),
    ],
    grid="small_int_lists",
    tags=("list", "number"),
)

_builtin(
    "is_palindrome",
    """
    def is_palindrome(s):
        t = s.lower()
        return t == t[::-1]
    """,
    [
        ("",),
        ("a",),
        ("ab",),
        ("aba",),
        ("racecar",),
        ("Racecar",),
        ("noon",),
        ("palindrome",),
        ("Abba",),
        ("abcba",),
    ],
    grid="case_strings",
    tags=("string", "bool"),
)

_builtin(
    "fibonacci",
    """
    def fibonacci(n):
        if n < 0:
            raise ValueError('negative index')
        a, b = 0, 1
        for _ in range(n):
            a, b = b, a + b
        return a
    """,
    [(0,), (1,), (2,), (3,), (4,), (5,), (7,), (9,), (10,), (12,)],
    grid="small_ints",
    tags=("number", "raises-on-negative"),
)

_builtin(
    "factorial_recursive",
    """
    def factorial_recursive(n):
        if n < 0:
            raise ValueError('negative index')
        if n <= 1:
            return 1
        return n * factorial_recursive(n - 1)
    """,
    [(0,), (1,), (2,), (3,), (4,), (5,), (6,), (7,), (8,), (10,)],
    grid="small_ints",
    tags=("number", "recursive", "raises-on-negative"),
)

_builtin(
    "count_vowels",
    """
    def count_vowels(s):
        return sum(1 for c in s if c.lower() in 'aeiou')
    """,
    [
        ("",),
        ("a",),
        ("xyz",),
        ("hello",),
        ("AEIOU",),
        ("queueing",),
        ("rhythm",),
        ("Beautiful Day",),
        ("aeiouaeiou",),
        ("bcd aei",),
    ],
    grid="vowel_strings",
    tags=("string", "number"),
)

_builtin(
    "max_of_list",
    """
    def max_of_list(lst):
        return max(lst)
    """,
    [
        ([],),
        ([1],),
        ([1, 2, 3],),
        ([-5, -2, -9],),
        ([3, 3, 3],),
        ([10, 2],),
        ([0, -1],),
        ([7, 100, 5],),
        ([-1],),
        ([2, 9, 4, 9],),
    ],
    grid="small_int_lists",
    tags=("list", "number", "raises-on-empty"),
)

_builtin(
    "min_max_diff",
    """
    def min_max_diff(lst):
        return max(lst) - min(lst)
    """,
    [
        ([1],),
        ([1, 5],),
        ([-3, 3],),
        ([10, 10],),
        ([2, 8, 4],),
        ([0, 100],),
        ([-5, -1],),
        ([6],),
        ([9, 3, 7, 1],),
        ([-2, 0, 2],),
    ],
    grid="small_int_lists",
    tags=("list", "number", "raises-on-empty"),
)

_builtin(
    "is_sorted",
    """
    def is_sorted(lst):
        for i in range(len(lst) - 1):
            if lst[i] > lst[i + 1]:
                return False
        return True
    """,
    [
        ([],),
        ([1],),
        ([1, 2, 3],),
        ([3, 2, 1],),
        ([1, 1, 2],),
        ([5, 5, 5],),
        ([1, 3, 2],),
        ([-2, -1, 0],),
        ([10, 9],),
        ([0, 0, 1, 1, 2],),
    ],
    grid="small_int_lists",
    tags=("list", "bool"),
)

_builtin(
    "dedupe_preserve_order",
    """
    def dedupe_preserve_order(lst):
        seen = set()
        out = []
        for x in lst:
            if x not in seen:
                seen.add(x)
                out.append(x)
        return out
    """,
    [
        ([],),
        ([1, 1, 2],),
        ([3, 1, 3, 2],),
        (["a", "a"],),
        ([1, 2, 3],),
        (["b", "a", "b", "c"],),
        ([5, 5, 5, 5],),
        ([2, 1, 2, 1],),
        (["x"],),
        ([0, 1, 0, 1, 0],),
    ],
    grid="small_mixed_lists",
    tags=("list", "raises-on-unhashable"),
)

_builtin(
    "flatten_once",
    """
    def flatten_once(lst):
        out = []
        for x in lst:
            if isinstance(x, list):
                out.extend(x)
            else:
                out.append(x)
        return out
    """,
    [
        ([],),
        ([1, 2],),
        ([[1, 2], 3],),
        ([[1], [2], [3]],),
        ([[], 1],),
        ([["a", "b"], "c"],),
        ([[1, [2]], 3],),
        ([[5, 6], [5, 6]],),
        ([0, [0]],),
        ([[1, 2, 3]],),
    ],
    grid="small_mixed_lists",
    tags=("list", "nested"),
)

_builtin(
    "title_case_words",
    """
    def title_case_words(s):
        return ' '.join(w.capitalize() for w in s.split(' '))
    """,
    [
        ("",),
        ("a",),
        ("hello",),
        ("hello world",),
        ("HELLO WORLD",),
        ("hi there you",),
        ("a b c",),
        ("multi  space",),
        ("mIxEd CaSe",),
        ("one",),
    ],
    grid="spacey_strings",
    tags=("string",),
)

_builtin(
    "char_frequency",
    """
    def char_frequency(s):
        freq = {}
        for c in s:
            freq[c] = freq.get(c, 0) + 1
        return freq
    """,
    [
        ("",),
        ("a",),
        ("aa",),
        ("ab",),
        ("hello",),
        ("aabbb",),
        ("xyzx",),
        ("noon",),
        ("abc abc",),
        ("zz top",),
    ],
    grid="char_strings",
    tags=("string", "map"),
)

_builtin(
    "running_sum",
    """
    def running_sum(lst):
        out = []
        total = 0
        for x in lst:
            total += x
            out.append(total)
        return out
    """,
    [
        ([],),
        ([1],),
        ([1, 2, 3],),
        ([-1, 1, -1],),
        ([0, 0],),
        ([5, 5, 5],),
        ([10, -10],),
        ([2, 4, 6, 8],),
        ([-3],),
        ([1, 1, 1, 1, 1],),
    ],
    grid="small_int_lists",
    tags=("list", "number"),
)

_builtin(
    "interleave",
    """
    def interleave(a, b):
        out = []
        for x, y in zip(a, b):
            out.append(x)
            out.append(y)
        out.extend(a[len(b):])
        out.extend(b[len(a):])
        return out
    """,
    [
        ([], []),
        ([1], [2]),
        ([1, 2], [3, 4]),
        ([1, 2, 3], [4]),
        ([1], [2, 3, 4]),
        (["a"], ["b"]),
        ([], [1, 2]),
        ([1, 2], []),
        ([0, 0], [1, 1]),
        ([5, 6, 7], [8, 9, 10]),
    ],
    grid="int_list_pairs",
    tags=("list", "arity-2"),
)

_builtin(
    "clamp",
    """
    def clamp(x, lo, hi):
        return max(lo, min(hi, x))
    """,
    [
        (5, 0, 10),
        (-5, 0, 10),
        (15, 0, 10),
        (0, 0, 10),
        (10, 0, 10),
        (7, 7, 7),
        (3, 1, 2),
        (-1, -5, 5),
        (100, -10, 10),
        (2, 0, 4),
    ],
    grid="int_triples",
    tags=("number", "arity-3"),
)

_builtin(
    "gcd_pair",
    """
    def gcd_pair(a, b):
        a, b = abs(a), abs(b)
        while b:
            a, b = b, a % b
        return a
    """,
    [(0, 0), (1, 1), (4, 6), (6, 4), (12, 18), (7, 13), (-4, 6), (4, -6), (0, 5), (100, 75)],
    grid="int_pairs",
    tags=("number", "arity-2"),
)

_builtin(
    "is_prime",
    """
    def is_prime(n):
        if n < 2:
            return False
        i = 2
        while i * i <= n:
            if n % i == 0:
                return False
            i += 1
        return True
    """,
    [(0,), (1,), (2,), (3,), (4,), (9,), (17,), (25,), (29,), (-7,)],
    grid="small_ints",
    tags=("number", "bool"),
)

_builtin(
    "digit_sum",
    """
    def digit_sum(n):
        n = abs(n)
        total = 0
        while n:
            total += n % 10
            n //= 10
        return total
    """,
    [(0,), (5,), (10,), (99,), (123,), (-45,), (1000,), (777,), (-9,), (101,)],
    grid="small_ints",
    tags=("number",),
)

_builtin(
    "repeat_string",
    """
    def repeat_string(s, n):
        return s * n
    """,
    [
        ("a", 3),
        ("", 5),
        ("ab", 0),
        ("xy", 2),
        ("z", 1),
        ("ha", 4),
        ("a", -1),
        ("abc", 3),
        (" ", 2),
        ("0", 5),
    ],
    grid="str_int_pairs",
    tags=("string", "arity-2"),
)

_builtin(
    "swap_case",
    """
    def swap_case(s):
        out = []
        for c in s:
            if c.islower():
                out.append(c.upper())
            elif c.isupper():
                out.append(c.lower())
            else:
                out.append(c)
        return ''.join(out)
    """,
    [("",), ("a",), ("A",), ("aB",), ("Hello",), ("WORLD",), ("mIxEd",), ("123",), ("a1B2",), ("Zz",)],
    grid="char_strings",
    tags=("string",),
)

_builtin(
    "strip_digits",
    """
    def strip_digits(s):
        return ''.join(c for c in s if not c.isdigit())
    """,
    [
        ("",),
        ("abc",),
        ("123",),
        ("a1b2",),
        ("2024ad",),
        ("x9",),
        ("no digits",),
        ("007bond",),
        ("9",),
        ("mix3d up5",),
    ],
    grid="char_strings",
    tags=("string",),
)

_builtin(
    "rotate_list",
    """
    def rotate_list(lst, k):
        if not lst:
            return []
        k = k % len(lst)
        if not k:
            return list(lst)
        return lst[-k:] + lst[:-k]
    """,
    [
        ([], 0),
        ([1], 1),
        ([1, 2, 3], 1),
        ([1, 2, 3], 2),
        ([1, 2, 3], 3),
        ([1, 2, 3], 4),
        ([1, 2, 3, 4], -1),
        ([5, 6], 0),
        ([1, 2, 3, 4, 5], 2),
        ([7, 8, 9], -2),
    ],
    grid="list_int_pairs",
    tags=("list", "arity-2"),
)

_builtin(
    "second_largest",
    """
    def second_largest(lst):
        distinct = sorted(set(lst))
        if len(distinct) < 2:
            raise ValueError('need two distinct values')
        return distinct[-2]
    """,
    [
        ([1, 2],),
        ([2, 1],),
        ([1, 1],),
        ([5, 5, 3],),
        ([1, 2, 3, 4],),
        ([-1, -2],),
        ([10],),
        ([4, 4, 4, 4],),
        ([7, 3, 9, 1],),
        ([0, -1, 1],),
    ],
    grid="small_mixed_lists",
    tags=("list", "number", "raises-on-empty", "raises-on-unhashable"),
)

_builtin(
    "count_words",
    """
    def count_words(s):
        return len(s.split())
    """,
    [
        ("",),
        ("hi",),
        ("hi there",),
        ("a b c d",),
        ("  spaced  out  ",),
        ("one",),
        ("tab sep",),
        ("multi  space",),
        (" lead",),
        ("trail ",),
    ],
    grid="spacey_strings",
    tags=("string", "number"),
)

_builtin(
    "balanced_parens",
    """
    def balanced_parens(s):
        depth = 0
        for c in s:
            if c == '(':
                depth += 1
            elif c == ')':
                depth -= 1
                if depth < 0:
                    return False
        return depth == 0
    """,
    [
        ("",),
        ("()",),
        ("(",),
        (")",),
        ("(())",),
        ("()()",),
        (")(",),
        ("((x))",),
        ("(()",),
        ("a(b)c",),
    ],
    grid="paren_strings",
    tags=("string", "bool"),
)

_builtin(
    "merge_sorted",
    """
    def merge_sorted(a, b):
        out = []
        i = j = 0
        while i < len(a) and j < len(b):
            if a[i] <= b[j]:
                out.append(a[i])
                i += 1
            else:
                out.append(b[j])
                j += 1
        out.extend(a[i:])
        out.extend(b[j:])
        return out
    """,
    [
        ([], []),
        ([1], []),
        ([], [2]),
        ([1, 3], [2, 4]),
        ([1, 2], [3, 4]),
        ([5], [1]),
        ([1, 1], [1]),
        ([2, 4, 6], [1, 3, 5]),
        ([0], [0]),
        ([1, 5, 9], [2, 3]),
    ],
    grid="int_list_pairs",
    tags=("list", "arity-2"),
)

_builtin(
    "caesar_shift",
    """
    def caesar_shift(s, k):
        out = []
        for c in s:
            if 'a' <= c <= 'z':
                out.append(chr((ord(c) - 97 + k) % 26 + 97))
            else:
                out.append(c)
        return ''.join(out)
    """,
    [
        ("abc", 1),
        ("xyz", 3),
        ("", 5),
        ("hello", 0),
        ("a", 25),
        ("z", 1),
        ("abc!", 2),
        ("attack", 13),
        ("m", 13),
        ("ab yz", 4),
    ],
    grid="caesar_pairs",
    tags=("string", "arity-2"),
)


@lru_cache(maxsize=1)
def registry() -> dict[str, BuiltinSpec]:
    specs: dict[str, BuiltinSpec] = {}
    for name, source in _SOURCES.items():
        namespace: dict = {}
        exec(compile(source, f"<builtin:{name}>", "exec"), namespace)
        fn = namespace[name]
        seeds = tuple(_args(*host_args) for host_args in _SEEDS[name])
        arity = len(_SEEDS[name][0])
        specs[name] = BuiltinSpec(
            name=name,
            arity=arity,
            source=source,
            fn=fn,
            seeds=seeds,
            grid=_GRIDS[name],
            tags=_TAGS[name],
        )
    return specs


# --- mutation corpus -------------------------------------------------------

_FRAGMENT_MUTANTS: list[tuple[str, str, str, str, str]] = [
    # (name, builtin, operator, old fragment, new fragment)
    ("sum_negate_step", "sum_list", "arithmetic-swap", "total += x", "total -= x"),
    ("sum_bad_init", "sum_list", "constant", "total = 0", "total = 1"),
    ("sum_skip_first", "sum_list", "slice-off-by-one", "for x in lst:", "for x in lst[1:]:"),
    ("reverse_stride_two", "reverse_string", "slice-step", "s[::-1]", "s[::-2]"),
    ("reverse_identity", "reverse_string", "statement-simplify", "return s[::-1]", "return s"),
    ("palindrome_case_sensitive", "is_palindrome", "call-delete", "t = s.lower()", "t = s"),
    ("palindrome_negate", "is_palindrome", "comparison-negate", "return t == t[::-1]", "return t != t[::-1]"),
    ("abs_sort_no_key", "abs_sort", "argument-delete", "sorted(lst, key=abs)", "sorted(lst)"),
    ("abs_sort_reversed", "abs_sort", "argument-add", "sorted(lst, key=abs)", "sorted(lst, key=abs, reverse=True)"),
    ("fib_subtract", "fibonacci", "arithmetic-swap", "a, b = b, a + b", "a, b = b, a - b"),
    ("fib_short_loop", "fibonacci", "off-by-one", "range(n)", "range(n - 1)"),
    ("fib_reject_zero", "fibonacci", "boundary", "if n < 0:", "if n <= 0:"),
    ("unique_ge", "has_unique_elements", "comparison-swap", "len(lst) == len(set(lst))", "len(lst) >= len(set(lst))"),
    ("factorial_zero_base", "factorial_recursive", "constant", "return 1", "return 0"),
    ("factorial_skip", "factorial_recursive", "off-by-one", "factorial_recursive(n - 1)", "factorial_recursive(n - 2)"),
    ("vowels_drop_u", "count_vowels", "constant", "'aeiou'", "'aeio'"),
    ("vowels_case_sensitive", "count_vowels", "call-delete", "c.lower() in", "c in"),
    ("max_is_min", "max_of_list", "function-swap", "max(lst)", "min(lst)"),
    ("diff_is_sum", "min_max_diff", "arithmetic-swap", "max(lst) - min(lst)", "max(lst) + min(lst)"),
    ("sorted_strict", "is_sorted", "comparison-swap", "lst[i] > lst[i + 1]", "lst[i] >= lst[i + 1]"),
    ("sorted_skip_last", "is_sorted", "off-by-one", "len(lst) - 1", "len(lst) - 2"),
    ("dedupe_invert", "dedupe_preserve_order", "comparison-negate", "if x not in seen:", "if x in seen:"),
    ("dedupe_never_mark", "dedupe_preserve_order", "method-swap", "seen.add(x)", "seen.discard(x)"),
    ("flatten_tuples", "flatten_once", "type-constant", "isinstance(x, list)", "isinstance(x, tuple)"),
    ("flatten_append", "flatten_once", "method-swap", "out.extend(x)", "out.append(x)"),
    ("title_shout", "title_case_words", "method-swap", "w.capitalize()", "w.upper()"),
    ("title_collapse_spaces", "title_case_words", "argument-delete", "s.split(' ')", "s.split()"),
    ("freq_double_count", "char_frequency", "constant", "freq.get(c, 0) + 1", "freq.get(c, 0) + 2"),
    ("freq_bad_default", "char_frequency", "constant", "freq.get(c, 0)", "freq.get(c, 1)"),
    ("running_overwrite", "running_sum", "arithmetic-swap", "total += x", "total = x"),
    ("interleave_swapped", "interleave", "order-swap", "out.append(x)\n        out.append(y)", "out.append(y)\n        out.append(x)"),
    ("interleave_drop_tail", "interleave", "name-swap", "out.extend(a[len(b):])", "out.extend(a[len(a):])"),
    ("clamp_min_outer", "clamp", "function-swap", "max(lo, min(hi, x))", "min(lo, min(hi, x))"),
    ("clamp_lo_inner", "clamp", "name-swap", "min(hi, x)", "min(lo, x)"),
    ("gcd_early_stop", "gcd_pair", "boundary", "while b:", "while b > 1:"),
    ("gcd_same_operand", "gcd_pair", "name-swap", "abs(a), abs(b)", "abs(a), abs(a)"),
    ("prime_skip_squares", "is_prime", "boundary", "i * i <= n", "i * i < n"),
    ("prime_reject_two", "is_prime", "constant", "if n < 2:", "if n < 3:"),
    ("digits_mod_hundred", "digit_sum", "constant", "total += n % 10", "total += n % 100"),
    ("digits_shift_hundred", "digit_sum", "constant", "n //= 10", "n //= 100"),
    ("repeat_extra", "repeat_string", "off-by-one", "return s * n", "return s * (n + 1)"),
    ("swap_keep_lower", "swap_case", "call-delete", "out.append(c.upper())", "out.append(c)"),
    ("strip_keep_digits", "strip_digits", "comparison-negate", "not c.isdigit()", "c.isdigit()"),
    ("rotate_wrong_way", "rotate_list", "sign-swap", "lst[-k:] + lst[:-k]", "lst[k:] + lst[:k]"),
    ("second_is_first", "second_largest", "index-constant", "distinct[-2]", "distinct[-1]"),
    ("second_no_guard", "second_largest", "constant", "len(distinct) < 2", "len(distinct) < 1"),
    ("words_space_split", "count_words", "argument-add", "s.split()", "s.split(' ')"),
    ("parens_late_fail", "balanced_parens", "constant", "if depth < 0:", "if depth < -1:"),
    ("parens_accept_open", "balanced_parens", "comparison-swap", "return depth == 0", "return depth >= 0"),
    ("merge_backwards", "merge_sorted", "comparison-swap", "if a[i] <= b[j]:", "if a[i] >= b[j]:"),
    ("merge_wrong_tail", "merge_sorted", "name-swap", "out.extend(a[i:])", "out.extend(a[j:])"),
    ("caesar_mod_25", "caesar_shift", "constant", "% 26", "% 25"),
    ("caesar_unshift", "caesar_shift", "sign-swap", "ord(c) - 97 + k", "ord(c) - 97 - k"),
    # Territory-specific mutants: each differs only on inputs a single
    # generation strategy produces (non-ASCII letters live only in the fixed
    # unicode boundary probe; strings longer than twice the observed length
    # cap come only from the grow mutation).
    ("caesar_ascii_check", "caesar_shift", "predicate-swap", "'a' <= c <= 'z'", "c.islower()"),
    ("caesar_length_cap", "caesar_shift", "slice-insertion", "for c in s:", "for c in s[:12]:"),
]

# The classic rewrite: pairwise comparison instead of set construction.
# Behaviorally identical on hashable elements; silently returns instead of
# raising TypeError when the list contains unhashable elements.
_PAIRWISE_UNIQUE = '''
def has_unique_elements(lst):
    n = len(lst)
    for i in range(n):
        for j in range(i + 1, n):
            if lst[i] == lst[j]:
                return False
    return True
'''.strip() + "\n"


@lru_cache(maxsize=1)
def mutants() -> tuple[MutantSpec, ...]:
    reg = registry()
    out = [
        MutantSpec(
            name="unique_pairwise_scan",
            builtin="has_unique_elements",
            operator="algorithm-swap",
            source=_PAIRWISE_UNIQUE,
        )
    ]
    for name, builtin, operator, old, new in _FRAGMENT_MUTANTS:
        truth = reg[builtin].source
        if truth.count(old) != 1:
            raise AssertionError(f"mutant {name}: fragment occurs {truth.count(old)} times")
        out.append(
            MutantSpec(name=name, builtin=builtin, operator=operator, source=truth.replace(old, new))
        )
    return tuple(out)
