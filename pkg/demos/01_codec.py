"""
Dyadic names on the wire
========================

Names travel in bijective base 2: digits 1 and 2, no zero, no leading
padding.  Every positive integer has exactly one spelling, and the length of
``n`` is ``floor(log2(n + 1))``.
"""

from archring import code_length, dyadic_decode, dyadic_encode, message_bits
from archring.protocol import Election, Sleepwell

for n in range(1, 11):
    print(f"{n:3d} -> {dyadic_encode(n):>4s}  (length {code_length(n)})")

# Decoding is the inverse.
assert all(dyadic_decode(dyadic_encode(n)) == n for n in range(1, 5000))

# An election message pays two framing bits plus the name; control messages
# carry the framing alone.
print(message_bits(Election(100)), dyadic_encode(100))
print(message_bits(Sleepwell()))
