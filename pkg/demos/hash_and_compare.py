"""
Hashing images and comparing hashes
===================================

Build a few synthetic pages, hash them and look at how the correlation
separates near copies from different layouts.
"""

import numpy as np

from fdnshash import attacks, desk, fdns

# two page designs and a lightly edited copy of the first
forum = desk.template_families()["forum"]
wiki = desk.template_families()["wiki"]
edited = attacks.jpeg_compress(attacks.brightness(forum, 12), 70)

# a hash is 64 floats tagged with the fingerprint of the parameters used
h_forum = fdns.hash_image(forum)
h_wiki = fdns.hash_image(wiki)
h_edited = fdns.hash_image(edited)
print("hash length:", len(h_forum), "fingerprint:", h_forum.params_fingerprint)
print("first values:", np.round(h_forum.values[:6], 2))

# Pearson correlation is the similarity score
print("forum vs edited forum: %.4f" % fdns.correlation(h_forum, h_edited))
print("forum vs wiki:         %.4f" % fdns.correlation(h_forum, h_wiki))

# a flat image carries no structure and hashes to zeros
flat = fdns.hash_image(np.full((100, 120), 128.0))
print("flat image hash is all zero:", not flat.values.any())

# hashes made with different parameters refuse to compare
coarse = fdns.hash_image(forum, fdns.FdnsParams(canonical_w=128, canonical_h=128))
try:
    fdns.correlation(h_forum, coarse)
except fdns.IncompatibleHashError as exc:
    print("refused:", exc)
