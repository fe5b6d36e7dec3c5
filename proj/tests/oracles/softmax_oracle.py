"""Direct exp/sum evaluation used to freeze softmax expectations."""
import math

def softmax(xs):
    e = [math.exp(x) for x in xs]
    s = sum(e)
    return [v / s for v in e]

if __name__ == "__main__":
    for v in softmax([0.9, 0.5, 0.3]):
        print(repr(v))
