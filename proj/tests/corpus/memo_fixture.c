/*
 * Travel-time helper of the routing workload (BPR link cost) and a driver
 * that evaluates it over a repeated set of link loads.
 */
#include <math.h>
#include <stdio.h>

double edge_cost(double load)
{
    double ratio = load / 40.0;
    return 12.0 * (1.0 + 0.15 * pow(ratio, 4.0));
}

int main(void)
{
    double total = 0.0;
    int round, k;

    for (round = 0; round < 10; round++) {
        for (k = 1; k <= 50; k++) {
            double c = edge_cost(k * 1.5);
            total += c;
            if (round == 9)
                printf("%d %.17g\n", k, c);
        }
    }
    printf("total %.17g\n", total);
    return 0;
}
