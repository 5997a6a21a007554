from common import *

import random

# concepts:
# rotation, symmetry

# description:
# A small wheel pattern sits on a black canvas. The wheel turns a quarter turn
# clockwise, so the output is the input rotated by 90 degrees.

def main(input_grid):
    return rotate_cw(input_grid)

def generate_input():
    size = random.randint(3, 9)
    wheel = new_grid(size, size)
    spoke_color = random.choice(NOT_BLACK)
    for step in range(size):
        wheel[size // 2][step] = spoke_color
    wheel[0][random.randrange(size)] = random.choice(NOT_BLACK)
    return wheel
