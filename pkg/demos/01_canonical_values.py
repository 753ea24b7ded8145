"""Canonical values: how call inputs and outputs are compared.

Two calls are "the same input" when their canonical renderings match, so this
is the equality every recommender and the replay engine rely on.
"""
from memorec.canonical import RawObject, TruncationPolicy, canonicalize, parse_canonical
from memorec.canonical import prune

print("scalars and containers")
for value in (42, "a,b", None, [1, [2, 3]], {"b": 2, "a": 1}):
    print(f"  {value!r:20} -> {canonicalize(value).render()}")

# Maps keep their iteration order, so key order is part of the value.
print("key order matters:", canonicalize({"b": 2, "a": 1}) != canonicalize({"a": 1, "b": 2}))

# A list that contains itself renders a back-reference instead of looping.
loop = [1]
loop.append(loop)
print("\ncycle:", canonicalize(loop).render())

# Objects outside the application's packages collapse to an opaque leaf.
policy = TruncationPolicy(application=("shop",))
cart = RawObject("shop.cart", {"owner": "ann", "items": [3, 5]}, type_name="Cart")
conn = RawObject("java.sql", text="Connection@1f", type_name="Connection")
print("\napplication object:", canonicalize(cart, policy).render())
print("library object:    ", canonicalize(conn, policy).render())

# Pruning limits the depth a comparison looks at.
deep = canonicalize({"a": {"b": {"c": 1}}})
for d in (1, 2, 3, 4):
    print(f"prune to depth {d}: {prune(deep, d).render()}")

# Renderings parse back to the same tree.
text = canonicalize({"k": ["x", {"y": None}]}).render()
assert parse_canonical(text).render() == text
print("\nround trip ok:", text)
