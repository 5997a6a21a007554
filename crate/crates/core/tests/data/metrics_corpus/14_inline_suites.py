def clamp(v, lo, hi):
    if v < lo: return lo
    elif v > hi: return hi
    else: return v

def sign(v):
    while False: pass
    return 1 if v > 0 else -1 if v < 0 else 0
