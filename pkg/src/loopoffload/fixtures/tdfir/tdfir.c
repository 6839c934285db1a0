/*
 * Time-domain FIR filter bank.
 *
 * Each of NUM_FILTERS complex input streams is convolved with its own complex
 * filter. The driver builds inputs and taps, runs the filter bank a few
 * times, and checks the result against a double-precision reference.
 */
#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include "tdfir.h"

float input_re[NUM_FILTERS][INPUT_LEN];
float input_im[NUM_FILTERS][INPUT_LEN];
float filter_re[NUM_FILTERS][FILTER_LEN];
float filter_im[NUM_FILTERS][FILTER_LEN];
float output_re[NUM_FILTERS][OUTPUT_LEN];
float output_im[NUM_FILTERS][OUTPUT_LEN];
float power[NUM_FILTERS][OUTPUT_LEN];
float decimated_re[NUM_FILTERS][OUTPUT_LEN / 2];
float decimated_im[NUM_FILTERS][OUTPUT_LEN / 2];
float energy[NUM_FILTERS];
int peak_index[NUM_FILTERS];

/* complex multiply-accumulate over every output sample of one filter */
void tdfir_filter(int f)
{
    int i, k;
    for (i = 0; i < INPUT_LEN; i++) {
        for (k = 0; k < FILTER_LEN; k++) {
            output_re[f][i + k] += input_re[f][i] * filter_re[f][k] - input_im[f][i] * filter_im[f][k];
            output_im[f][i + k] += input_re[f][i] * filter_im[f][k] + input_im[f][i] * filter_re[f][k];
        }
    }
}

void tdfir_bank(void)
{
    int f;
    for (f = 0; f < NUM_FILTERS; f++) {
        tdfir_filter(f);
    }
}

void clear_output(void)
{
    int f, j;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (j = 0; j < OUTPUT_LEN; j++) {
            output_re[f][j] = 0.0f;
            output_im[f][j] = 0.0f;
        }
    }
}

void output_power(void)
{
    int f, j;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (j = 0; j < OUTPUT_LEN; j++) {
            power[f][j] = output_re[f][j] * output_re[f][j] + output_im[f][j] * output_im[f][j];
        }
    }
}

void output_energy(void)
{
    int f, j;
    for (f = 0; f < NUM_FILTERS; f++) {
        energy[f] = 0.0f;
        for (j = 0; j < OUTPUT_LEN; j++) {
            energy[f] += power[f][j];
        }
    }
}

/* keep every second output sample */
void decimate(void)
{
    int f, j;
    for (f = 0; f < NUM_FILTERS; f++) {
        for (j = 0; j < OUTPUT_LEN / 2; j++) {
            decimated_re[f][j] = output_re[f][2 * j];
            decimated_im[f][j] = output_im[f][2 * j];
        }
    }
}

void find_peaks(void)
{
    int f, j;
    float best;
    for (f = 0; f < NUM_FILTERS; f++) {
        best = -1.0f;
        peak_index[f] = 0;
        j = 0;
        while (j < OUTPUT_LEN) {
            if (power[f][j] > best) {
                best = power[f][j];
                peak_index[f] = j;
            }
            j++;
        }
    }
}

int main(int argc, char **argv)
{
    int iter, f;
    int iterations = NUM_ITERS;
    double max_err;

    if (argc > 1) {
        iterations = atoi(argv[1]);
    }
    init_inputs();
    init_filters();
    normalize_filters();
    for (iter = 0; iter < iterations; iter++) {
        clear_output();
        tdfir_bank();
    }
    output_power();
    output_energy();
    decimate();
    find_peaks();
    compute_reference();
    max_err = compare_reference();
    for (f = 0; f < NUM_FILTERS; f++) {
        printf("filter %d: energy %.6e peak %d\n", f, energy[f], peak_index[f]);
    }
    printf("max error %.3e\n", max_err);
    return max_err < 1e-3 ? 0 : 1;
}
