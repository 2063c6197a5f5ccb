import itertools
import random

import pytest

from ledgerscan.amounts import (Amount, AmountParseError, parse_amount,
                                repair_token)


def grammar_oracle(s: str) -> bool:
    """Independent recursive-descent recognizer for the amount grammar:
    value := "0" | nonzero-digit digit{0,2} ("," digit{3})* ("." digit{2})?
    """
    if s == "0":
        return True
    i = 0
    n = len(s)
    if i >= n or s[i] not in "123456789":
        return False
    i += 1
    leading = 1
    while i < n and leading < 3 and s[i].isdigit():
        i += 1
        leading += 1
    while i < n and s[i] == ",":
        group = s[i + 1:i + 4]
        if len(group) != 3 or not group.isdigit():
            return False
        i += 4
    if i < n and s[i] == ".":
        cents = s[i + 1:]
        return len(cents) == 2 and cents.isdigit() and i + 3 == n
    return i == n


class TestParseAmount:
    def test_valid_grouped_number(self):
        a = parse_amount("123,456.00")
        assert a.digits == "123456"
        assert a.cents == "00"
        assert a.value_cents == 12345600

    def test_leading_zero_rejected(self):
        with pytest.raises(AmountParseError) as err:
            parse_amount("023,456.00")
        assert err.value.code == "LEADING_ZERO"

    def test_bad_grouping_rejected(self):
        with pytest.raises(AmountParseError) as err:
            parse_amount("123,4.56")
        assert err.value.code == "BAD_NUMERIC"

    def test_zero_is_valid(self):
        assert parse_amount("0").value_cents == 0

    def test_letters_rejected(self):
        with pytest.raises(AmountParseError) as err:
            parse_amount("12a")
        assert err.value.code == "BAD_NUMERIC"

    def test_0123_flagged_leading_zero(self):
        with pytest.raises(AmountParseError) as err:
            parse_amount("0123")
        assert err.value.code == "LEADING_ZERO"

    def test_canonical_roundtrip(self):
        a = parse_amount("1,234.56")
        b = Amount.from_canonical(a.canonical, raw=a.raw)
        assert b.value_cents == a.value_cents

    def test_grammar_equivalence_short_strings(self):
        alphabet = "0123456789,."
        for length in range(1, 5):
            for chars in itertools.product(alphabet, repeat=length):
                s = "".join(chars)
                want = grammar_oracle(s)
                try:
                    parse_amount(s)
                    got = True
                except AmountParseError:
                    got = False
                assert got == want, s

    def test_grammar_equivalence_sampled_long_strings(self):
        rng = random.Random(0)
        alphabet = "0123456789,."
        for _ in range(20000):
            s = "".join(rng.choice(alphabet) for _ in range(rng.randint(5, 8)))
            want = grammar_oracle(s)
            try:
                parse_amount(s)
                got = True
            except AmountParseError:
                got = False
            assert got == want, s


class TestRepairToken:
    def test_letter_between_digits(self):
        assert repair_token("1O9")[0] == "109"

    def test_chained_confusions(self):
        assert repair_token("1GB")[0] == "168"

    def test_no_digit_context_untouched(self):
        repaired, applied = repair_token("BOND")
        assert repaired == "BOND"
        assert applied == []

    def test_letter_next_to_letter_untouched(self):
        assert repair_token("AB7")[0] == "AB7"

    def test_edge_letter_with_digit_neighbor(self):
        assert repair_token("B7")[0] == "87"
        assert repair_token("7B")[0] == "78"

    def test_applied_substitutions_reported(self):
        _, applied = repair_token("1O9")
        assert applied == [(1, "O", "0")]

    def test_all_letter_token_never_changes(self):
        for token in ("OO", "SOS", "GOB", "l"):
            assert repair_token(token)[0] == token

    def test_idempotent(self):
        rng = random.Random(1)
        chars = "0123456789OlIGBSxyzAB,."
        for _ in range(500):
            token = "".join(rng.choice(chars) for _ in range(rng.randint(1, 10)))
            once, _ = repair_token(token)
            twice, _ = repair_token(once)
            assert once == twice, token

    def test_never_touches_digitless_tokens(self):
        rng = random.Random(2)
        letters = "OlIGBSxyzAB"
        for _ in range(300):
            token = "".join(rng.choice(letters) for _ in range(rng.randint(1, 8)))
            assert repair_token(token)[0] == token

    def test_custom_table(self):
        repaired, _ = repair_token("4Z4", {"Z": "2"})
        assert repaired == "424"
