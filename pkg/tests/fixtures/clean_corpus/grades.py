def letter(score):
    if score >= 90:
        return "A"
    elif score >= 80:
        return "B"
    elif score >= 70:
        return "C"
    elif score >= 60:
        return "D"
    return "F"


def summarize(scores):
    total = sum(scores)
    n = len(scores)
    mean = total / n
    best = max(scores)
    worst = min(scores)
    return {"mean": mean, "best": best, "worst": worst, "grade": letter(mean)}


print(summarize([88, 92, 79, 85]))
