import pytest
from hypothesis import given
from hypothesis import strategies as st

from glyset.corpus import Recipe
from glyset.textprep import (
    UNK,
    build_vocabulary,
    load_stoplist,
    parse_ingredient,
    parse_ingredients,
    tokenize,
    tokenize_text,
    TokenizedRecipe,
)


def _recipe(title="", ingredients=(), directions=()):
    return Recipe("r", title, tuple(ingredients), tuple(directions), {})


def test_tokenize_examples():
    tr = tokenize(_recipe("Al-dente!", ["Boil 2 cups water."], []))
    assert tr.tokens_title == ("al", "dente")
    assert tr.tokens_ingredients == ("boil", "2", "cups", "water")
    assert tr.tokens_directions == ()
    assert tr.all_tokens == ("al", "dente", "boil", "2", "cups", "water")


def test_tokenize_unicode_punctuation():
    assert tokenize_text("Crème brûlée · “best” ever…") == ["crème", "brûlée", "best", "ever"]


@given(st.text())
def test_tokenize_idempotent(text):
    once = tokenize_text(text)
    assert tokenize_text(" ".join(once)) == once
    for tok in once:
        assert tok == tok.lower()
        assert not any(ch.isspace() for ch in tok)


# hand-checked expectations for the default stop-list
PARSE_FIXTURE = [
    ("2 1/2 cups all-purpose flour (sifted)", "all-purpose flour"),
    ("salt", "salt"),
    ("1 (8 ounce) package cream cheese", "cream cheese"),
    ("1 cup white sugar", "white sugar"),
    ("3 cloves garlic, minced", "garlic, minced"),
    ("½ teaspoon ground cinnamon", "ground cinnamon"),
    ("1½ tsp. baking soda", "baking soda"),
    ("1.5 lbs ground beef", "ground beef"),
    ("2-3 tablespoons olive oil", "olive oil"),
    ("1 (15 ounce) can black beans, drained", "black beans, drained"),
    ("4 slices bacon", "bacon"),
    ("1 pinch salt", "salt"),
    ("1 dash hot sauce", "hot sauce"),
    ("250 g butter", "butter"),
    ("500 ml chicken stock (low sodium)", "chicken stock"),
    ("1 liter water", "water"),
    ("2 inch piece ginger", "piece ginger"),
    ("3 eggs", "eggs"),
    ("1 pound linguine pasta", "linguine pasta"),
    ("Cups Of Rice", "Of Rice"),
]


@pytest.mark.parametrize("line,expected", PARSE_FIXTURE)
def test_parse_ingredient_fixture(line, expected):
    assert parse_ingredient(line) == expected


def test_parse_ingredients_keeps_order():
    assert parse_ingredients(["2 cups flour", "1 egg"]) == ["flour", "egg"]


@given(st.text(alphabet=st.sampled_from("abc 12/().,½-cup"), max_size=40))
def test_parse_never_introduces_tokens(line):
    assert set(tokenize_text(parse_ingredient(line))) <= set(tokenize_text(line))


def test_custom_stoplist(tmp_path):
    p = tmp_path / "stop.txt"
    p.write_text("bunch\n# comment\nCUP\n")
    stop = load_stoplist(p)
    assert stop == frozenset({"bunch", "cup"})
    assert parse_ingredient("1 bunch cilantro", stop) == "cilantro"
    assert parse_ingredient("2 tablespoons oil", stop) == "tablespoons oil"


def test_parsed_tokenize_drops_quantities():
    tr = tokenize(_recipe("", ["2 cups flour"], []), parsed=True)
    assert tr.tokens_ingredients == ("flour",)


def _tr(tokens, rid="x"):
    return TokenizedRecipe(rid, (), tuple(tokens), ())


def test_vocabulary_min_count():
    corpus = [_tr(["flour"] * 100 + ["zatar"] * 2 + ["sugar"] * 5)]
    v = build_vocabulary(corpus)
    assert v.index == {"flour": 0, "sugar": 1}
    assert v.lookup("zatar") == UNK
    assert UNK not in v.index


def test_vocabulary_all_frequent():
    corpus = [_tr(["a", "b", "c"] * 5)]
    assert len(build_vocabulary(corpus)) == 3


def test_vocabulary_order_ties_by_token():
    v = build_vocabulary([_tr(["b"] * 6 + ["a"] * 6 + ["c"] * 9)])
    assert v.tokens == ["c", "a", "b"]


def test_vocabulary_empty_corpus():
    with pytest.raises(ValueError):
        build_vocabulary([])


token_lists = st.lists(st.lists(st.sampled_from("abcdefgh"), max_size=30), min_size=1, max_size=8)


@given(token_lists, st.randoms(use_true_random=False))
def test_vocabulary_permutation_invariant(docs, random):
    corpus = [_tr(d, str(i)) for i, d in enumerate(docs)]
    shuffled = corpus[:]
    random.shuffle(shuffled)
    assert build_vocabulary(corpus).index == build_vocabulary(shuffled).index


@given(token_lists)
def test_vocabulary_monotone_in_min_count(docs):
    corpus = [_tr(d, str(i)) for i, d in enumerate(docs)]
    sizes = [len(build_vocabulary(corpus, m)) for m in (1, 2, 5, 10)]
    assert sizes == sorted(sizes, reverse=True)


def test_vocabulary_csv(tmp_path):
    v = build_vocabulary([_tr(["a"] * 6 + ["b"] * 5)])
    v.write_csv(tmp_path / "v.csv")
    assert (tmp_path / "v.csv").read_text() == "token,index,count\na,0,6\nb,1,5\n"
