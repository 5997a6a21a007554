import random

COLORS = [1, 2, 3]
if random.random() > 0.5 and COLORS:
    COLORS.reverse()
SIZE = 3 if len(COLORS) > 2 else 2
assert SIZE >= 2
