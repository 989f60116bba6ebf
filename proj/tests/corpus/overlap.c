/*
 * Pairwise Gaussian overlap between synthetic atom clouds.
 *
 * Input (argv[1] or stdin): first line is the pocket atom count, then one
 * ligand atom count per line. For every ligand the program prints the
 * normalized overlap score between the ligand cloud and the pocket cloud.
 */
#include <stdio.h>
#include <stdlib.h>
#include <math.h>

static double gauss_overlap(double d2, double alpha)
{
    return exp(-alpha * d2);
}

/* Deterministic pseudo-random coordinates in a unit cube shifted by offset. */
static void make_points(int n, unsigned seed, double offset, double *xs, double *ys, double *zs)
{
    unsigned state = seed;
    int i;
    for (i = 0; i < n; i++) {
        state = state * 1103515245u + 12345u;
        xs[i] = offset + (double)(state % 10000u) / 10000.0;
        state = state * 1103515245u + 12345u;
        ys[i] = (double)(state % 10000u) / 10000.0;
        state = state * 1103515245u + 12345u;
        zs[i] = (double)(state % 10000u) / 10000.0;
    }
}

static double measure_overlap(int na, const double *ax, const double *ay, const double *az,
                              int nb, const double *bx, const double *by, const double *bz)
{
    double s = 0.0;
    int i, j;
    for (i = 0; i < na; i++) {
        for (j = 0; j < nb; j++) {
            double dx = ax[i] - bx[j];
            double dy = ay[i] - by[j];
            double dz = az[i] - bz[j];
            double d2 = dx * dx + dy * dy + dz * dz;
            s += gauss_overlap(d2, 2.5);
        }
    }
    return s;
}

double overlap_score(int ligand_atoms, int pocket_atoms, unsigned seed, double separation)
{
    double *lx = malloc(sizeof(double) * ligand_atoms);
    double *ly = malloc(sizeof(double) * ligand_atoms);
    double *lz = malloc(sizeof(double) * ligand_atoms);
    double *px = malloc(sizeof(double) * pocket_atoms);
    double *py = malloc(sizeof(double) * pocket_atoms);
    double *pz = malloc(sizeof(double) * pocket_atoms);
    double ab, aa, bb;

    make_points(ligand_atoms, seed, 0.0, lx, ly, lz);
    make_points(pocket_atoms, seed + 7u, separation, px, py, pz);
    ab = measure_overlap(ligand_atoms, lx, ly, lz, pocket_atoms, px, py, pz);
    aa = measure_overlap(ligand_atoms, lx, ly, lz, ligand_atoms, lx, ly, lz);
    bb = measure_overlap(pocket_atoms, px, py, pz, pocket_atoms, px, py, pz);

    free(lx);
    free(ly);
    free(lz);
    free(px);
    free(py);
    free(pz);
    return ab / sqrt(aa * bb);
}

int main(int argc, char **argv)
{
    FILE *in = stdin;
    int pocket, ligand;
    unsigned seed = 1u;
    double score;

    if (argc > 1) {
        in = fopen(argv[1], "r");
        if (!in)
            return 1;
    }
    if (fscanf(in, "%d", &pocket) != 1 || pocket <= 0)
        return 1;
    while (fscanf(in, "%d", &ligand) == 1) {
        if (ligand <= 0)
            return 1;
        score = overlap_score(ligand, pocket, seed, 0.25);
        printf("%d %.17g\n", ligand, score);
        seed++;
    }
    return 0;
}
