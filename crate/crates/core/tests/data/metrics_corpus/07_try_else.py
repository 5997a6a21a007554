def load(path, default=None):
    try:
        value = parse(path)
    except ValueError:
        value = default
    except (KeyError, IndexError) as err:
        raise RuntimeError(str(err))
    else:
        value = value or default
    finally:
        close(path)
    return value
