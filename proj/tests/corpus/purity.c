/* Labeled fixture for memoizable-function detection. PURE marks the ground truth. */
#include <math.h>
#include <stdio.h>

int counter;
double scale_factor = 2.0;
const double kOffset = 0.5;

/* PURE */
double square(double x)
{
    return x * x;
}

/* PURE */
double hypot2(double x, double y)
{
    return sqrt(square(x) + square(y));
}

/* PURE */
int gcd(int a, int b)
{
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

/* PURE */
double poly(double x)
{
    double coeff[4];
    double r = 0.0;
    int i;
    coeff[0] = 1.0;
    coeff[1] = -2.0;
    coeff[2] = 0.5;
    coeff[3] = 3.0;
    for (i = 3; i >= 0; i--)
        r = r * x + coeff[i];
    return r;
}

/* PURE */
int fact(int n)
{
    if (n <= 1)
        return 1;
    return n * fact(n - 1);
}

/* PURE */
double shifted(double x)
{
    return fabs(x) + kOffset;
}

/* IMPURE: writes a global */
int next_id(int base)
{
    counter++;
    return base + counter;
}

/* IMPURE: performs IO */
double logged(double x)
{
    printf("%f\n", x);
    return x;
}

/* IMPURE: writes through a pointer */
void store(double *out, double v)
{
    *out = v;
}

/* IMPURE: static local state */
int ticker(int step)
{
    static int total = 0;
    total += step;
    return total;
}

/* IMPURE: calls an impure function */
int wrapped_id(int base)
{
    return next_id(base) * 2;
}

/* IMPURE for memoization: reads mutable global state */
double scaled(double x)
{
    return x * scale_factor;
}
