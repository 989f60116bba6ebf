/* The three canonical loop shapes. */
void vadd(int n, double *a, const double *b, const double *c)
{
    int i;
    for (i = 0; i < n; i++)
        a[i] = b[i] + c[i];
}

void prefix(int n, int *a)
{
    int i;
    for (i = 1; i < n; i++)
        a[i] = a[i - 1] + 1;
}

int total(int n, const int *a)
{
    int i;
    int s = 0;
    for (i = 0; i < n; i++)
        s += a[i];
    return s;
}
