double blend(double a)
{
    return a * 0.75 + 1.0;
}
