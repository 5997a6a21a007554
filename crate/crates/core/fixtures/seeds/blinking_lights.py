from common import *

import random

# concepts:
# color change, toggling

# description:
# A string of lights hangs across the grid. Every light switches color: red
# lights turn yellow and yellow lights turn red, while the wire stays grey.

def main(input_grid):
    swap = {RED: YELLOW, YELLOW: RED}
    return [[swap.get(bulb, bulb) for bulb in row] for row in input_grid]

def generate_input():
    height, width = random.randint(3, 8), random.randint(5, 14)
    lights = new_grid(height, width)
    wire_row = random.randrange(height)
    for col in range(width):
        lights[wire_row][col] = GREY if col % 2 else random.choice([RED, YELLOW])
    return lights
