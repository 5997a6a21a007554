//! Small candidate sources shared by the conformance suite and tests. Each
//! is runnable Python and carries the marker the fake runner keys on.

pub const TRANSPOSE: &str = "\
# fake-runner: transpose
import random

def main(grid):
    return [list(row) for row in zip(*grid)]

def generate_input():
    height, width = random.randint(2, 6), random.randint(2, 6)
    return [[random.randint(0, 9) for _ in range(width)] for _ in range(height)]
";

pub const IDENTITY: &str = "\
# fake-runner: identity
import random

def main(grid):
    return grid

def generate_input():
    size = random.randint(2, 5)
    return [[random.randint(1, 9) for _ in range(size)] for _ in range(size)]
";

pub const RAISES: &str = "\
# fake-runner: raises
def main(grid):
    return 1 // 0

def generate_input():
    return [[1]]
";

pub const DENIED_IMPORT: &str = "\
# fake-runner: identity
import subprocess

def main(grid):
    return grid

def generate_input():
    return [[1]]
";

pub const INFINITE_LOOP: &str = "\
# fake-runner: infinite_loop
def main(grid):
    while True:
        pass

def generate_input():
    return [[1, 2], [3, 4]]
";
