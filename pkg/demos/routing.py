"""How a holdings profile and a voids profile combine at lookup time.

    python demos/routing.py

The most specific key wins.  Exact keys outrank wildcards at the same depth,
and a holdings key beats an identical voids key unless voids are preferred.
"""

from archvoids.router import build_index, decision_tsv
from archvoids.urinorm import canonicalize, surt_string

holdings = ["com,example)/a/*", "com,example)/b/*"]
voids = ["com,example)/a/4", "com,example)/b/3", "com,example)/c/*"]
index = build_index(holdings, voids)

print("holdings:", ", ".join(holdings))
print("voids:   ", ", ".join(voids))
print()
print("uri\tverdict\tsource\tkey\tdepth")
for path in ["/a/1", "/a/1/z", "/a/4", "/b/3", "/b/30", "/c/1", "/c", "/d"]:
    uri = "http://example.com" + path
    print(decision_tsv(uri, index.match(uri)))

# Lookups go through the same canonicalization as profile keys.
print()
for messy in ["HTTP://Example.COM:80/a/./4", "http://example.com/%7Euser/../c/1?"]:
    print(f"{messy}\n  canonical {canonicalize(messy)}\n  key       {surt_string(messy)}"
          f"\n  verdict   {index.match(messy).verdict}")

print()
tied = "com,example)/b/3"
for prefer in (False, True):
    d = build_index([tied], [tied], prefer_voids=prefer).match("http://example.com/b/3")
    print(f"same key in both profiles, prefer_voids={prefer}: {d.verdict} ({d.source})")
